#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "itd/error.hpp"
#include "itd/events.hpp"

namespace itd {

struct MalformedRow : Error {
    MalformedRow(std::size_t line_number, const std::string& reason)
        : Error("line " + std::to_string(line_number) + ": " + reason), line(line_number) {}
    std::size_t line;
};

struct UnknownActivity : Error {
    UnknownActivity(std::size_t line_number, const std::string& activity)
        : Error("line " + std::to_string(line_number) + ": unknown activity \"" + activity + "\""),
          line(line_number) {}
    std::size_t line;
};

// Bad rows either abort the parse or are skipped and counted.
enum class RowPolicy { fail, skip };

struct ParseStats {
    std::size_t rows = 0;               // rows successfully parsed
    std::size_t malformed = 0;          // skipped under RowPolicy::skip
    std::size_t unknown_activity = 0;   // skipped under RowPolicy::skip
};

using EventSink = std::function<void(EventRecord&&)>;

// Streams one header-bearing CSV of the declared kind into `sink`, one
// EventRecord per data row in file order.
ParseStats parse_log_file(const std::filesystem::path& path, LogKind kind, RowPolicy policy,
                          const EventSink& sink);

std::vector<EventRecord> parse_log_file(const std::filesystem::path& path, LogKind kind,
                                        RowPolicy policy = RowPolicy::fail,
                                        ParseStats* stats = nullptr);

// Accepts `user,date` rows where date is either a full timestamp or a bare
// date; an optional header row is skipped. Distinct (user, day) pairs.
GroundTruth load_ground_truth(const std::filesystem::path& path, RowPolicy policy = RowPolicy::fail,
                              ParseStats* stats = nullptr);

struct UserDayKey {
    std::string user;
    Date date;
    auto operator<=>(const UserDayKey&) const = default;
};

// Keys exist iff at least one event occurred; group lists are sorted by
// (timestamp, event id).
using UserDayGroups = std::map<UserDayKey, std::vector<EventRecord>>;

UserDayGroups group_by_user_day(std::vector<EventRecord> events);

// Incremental variants for streaming ingest. finalize_groups applies the
// in-group sort; merge_groups folds a partial map in (order-insensitive).
void add_to_groups(UserDayGroups& groups, EventRecord&& event);
void merge_groups(UserDayGroups& into, UserDayGroups&& from);
void finalize_groups(UserDayGroups& groups);

struct CorpusPaths {
    std::filesystem::path logon;
    std::filesystem::path device;
    std::filesystem::path file;
    std::filesystem::path email;
    std::filesystem::path http;

    // the conventional five file names under one directory
    static CorpusPaths in_directory(const std::filesystem::path& dir);
};

struct IngestResult {
    UserDayGroups groups;
    ParseStats per_file[5];  // logon, device, file, email, http order
    std::size_t total_events = 0;
};

// Parses the five files concurrently and merges the partial maps.
IngestResult ingest_corpus(const CorpusPaths& paths, RowPolicy policy = RowPolicy::fail);

}  // namespace itd
