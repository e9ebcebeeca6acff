#include "itd/ingest.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <thread>

#include "itd/csv.hpp"

namespace itd {

namespace {

std::size_t expected_columns(LogKind kind) {
    switch (kind) {
        case LogKind::logon: return 5;   // id,date,user,pc,activity
        case LogKind::device: return 5;  // id,date,user,pc,activity
        case LogKind::file: return 6;    // id,date,user,pc,filename,content
        case LogKind::email: return 11;  // id,date,user,pc,to,cc,bcc,from,size,attachments,content
        case LogKind::http: return 6;    // id,date,user,pc,url,content
    }
    return 0;
}

std::vector<std::string> split_addresses(const std::string& field) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= field.size()) {
        const std::size_t semi = field.find(';', start);
        const std::size_t end = semi == std::string::npos ? field.size() : semi;
        if (end > start) out.emplace_back(field.substr(start, end - start));
        if (semi == std::string::npos) break;
        start = semi + 1;
    }
    return out;
}

bool parse_u64(const std::string& text, std::uint64_t& out) {
    if (text.empty()) return false;
    std::uint64_t v = 0;
    for (const char c : text) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    out = v;
    return true;
}

bool blank_row(const std::vector<std::string>& row) {
    return row.size() == 1 && row[0].empty();
}

}  // namespace

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::logon: return "Logon";
        case EventKind::logoff: return "Logoff";
        case EventKind::device_connect: return "Connect";
        case EventKind::device_disconnect: return "Disconnect";
        case EventKind::file: return "File";
        case EventKind::email: return "Email";
        case EventKind::http: return "Http";
    }
    return "?";
}

std::string_view to_string(LogKind kind) {
    switch (kind) {
        case LogKind::logon: return "logon";
        case LogKind::device: return "device";
        case LogKind::file: return "file";
        case LogKind::email: return "email";
        case LogKind::http: return "http";
    }
    return "?";
}

ParseStats parse_log_file(const std::filesystem::path& path, LogKind kind, RowPolicy policy,
                          const EventSink& sink) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    CsvReader reader(in);
    ParseStats stats;
    const std::size_t columns = expected_columns(kind);

    auto header = reader.next_row();
    if (!header) return stats;  // empty file: empty stream

    while (auto row = reader.next_row()) {
        if (blank_row(*row)) continue;
        const std::size_t line = reader.row_start_line();
        try {
            if (row->size() != columns) {
                throw MalformedRow(line, "expected " + std::to_string(columns) + " columns, got " +
                                             std::to_string(row->size()));
            }
            auto& f = *row;
            const auto when = Timestamp::try_parse(f[1]);
            if (!when) throw MalformedRow(line, "unparseable timestamp \"" + f[1] + "\"");
            if (f[2].empty()) throw MalformedRow(line, "empty user");
            if (f[3].empty()) throw MalformedRow(line, "empty pc");

            EventRecord ev;
            ev.id = std::move(f[0]);
            ev.when = *when;
            ev.user = std::move(f[2]);
            ev.pc = std::move(f[3]);

            switch (kind) {
                case LogKind::logon: {
                    if (f[4] == "Logon") ev.kind = EventKind::logon;
                    else if (f[4] == "Logoff") ev.kind = EventKind::logoff;
                    else throw UnknownActivity(line, f[4]);
                    break;
                }
                case LogKind::device: {
                    if (f[4] == "Connect") ev.kind = EventKind::device_connect;
                    else if (f[4] == "Disconnect") ev.kind = EventKind::device_disconnect;
                    else throw UnknownActivity(line, f[4]);
                    break;
                }
                case LogKind::file: {
                    ev.kind = EventKind::file;
                    ev.payload = FilePayload{std::move(f[4])};
                    break;
                }
                case LogKind::email: {
                    ev.kind = EventKind::email;
                    EmailPayload mail;
                    mail.to = split_addresses(f[4]);
                    mail.cc = split_addresses(f[5]);
                    mail.bcc = split_addresses(f[6]);
                    mail.from = std::move(f[7]);
                    std::uint64_t size = 0;
                    if (!parse_u64(f[8], size)) throw MalformedRow(line, "bad size \"" + f[8] + "\"");
                    mail.size_bytes = size;
                    std::uint64_t attachments = 0;
                    if (!parse_u64(f[9], attachments))
                        throw MalformedRow(line, "bad attachment count \"" + f[9] + "\"");
                    mail.attachments = static_cast<int>(attachments);
                    ev.payload = std::move(mail);
                    break;
                }
                case LogKind::http: {
                    ev.kind = EventKind::http;
                    ev.payload = HttpPayload{std::move(f[4])};
                    break;
                }
            }
            ++stats.rows;
            sink(std::move(ev));
        } catch (const UnknownActivity&) {
            if (policy == RowPolicy::fail) throw;
            ++stats.unknown_activity;
        } catch (const MalformedRow&) {
            if (policy == RowPolicy::fail) throw;
            ++stats.malformed;
        }
    }
    return stats;
}

std::vector<EventRecord> parse_log_file(const std::filesystem::path& path, LogKind kind,
                                        RowPolicy policy, ParseStats* stats) {
    std::vector<EventRecord> events;
    const ParseStats s = parse_log_file(path, kind, policy,
                                        [&events](EventRecord&& ev) { events.push_back(std::move(ev)); });
    if (stats) *stats = s;
    return events;
}

GroundTruth load_ground_truth(const std::filesystem::path& path, RowPolicy policy,
                              ParseStats* stats_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    CsvReader reader(in);
    GroundTruth truth;
    ParseStats stats;
    bool first = true;

    while (auto row = reader.next_row()) {
        if (blank_row(*row)) continue;
        const std::size_t line = reader.row_start_line();

        if (first) {
            first = false;
            if ((*row)[0] == "user") continue;  // header
        }
        try {
            if (row->size() != 2)
                throw MalformedRow(line, "expected 2 columns, got " + std::to_string(row->size()));
            const auto& f = *row;
            if (f[0].empty()) throw MalformedRow(line, "empty user");
            Date date;
            if (const auto ts = Timestamp::try_parse(f[1])) {
                date = ts->date;
            } else if (const auto d = Date::try_parse(f[1])) {
                date = *d;
            } else {
                throw MalformedRow(line, "unparseable date \"" + f[1] + "\"");
            }
            truth.insert(f[0], date);
            ++stats.rows;
        } catch (const MalformedRow&) {
            if (policy == RowPolicy::fail) throw;
            ++stats.malformed;
        }
    }
    if (stats_out) *stats_out = stats;
    return truth;
}

void add_to_groups(UserDayGroups& groups, EventRecord&& event) {
    UserDayKey key{event.user, event.when.date};
    groups[std::move(key)].push_back(std::move(event));
}

void merge_groups(UserDayGroups& into, UserDayGroups&& from) {
    for (auto& [key, events] : from) {
        auto& dst = into[key];
        dst.insert(dst.end(), std::make_move_iterator(events.begin()),
                   std::make_move_iterator(events.end()));
    }
    from.clear();
}

void finalize_groups(UserDayGroups& groups) {
    for (auto& [key, events] : groups) {
        std::sort(events.begin(), events.end(), [](const EventRecord& a, const EventRecord& b) {
            if (a.when != b.when) return a.when < b.when;
            return a.id < b.id;
        });
    }
}

UserDayGroups group_by_user_day(std::vector<EventRecord> events) {
    UserDayGroups groups;
    for (auto& ev : events) add_to_groups(groups, std::move(ev));
    finalize_groups(groups);
    return groups;
}

CorpusPaths CorpusPaths::in_directory(const std::filesystem::path& dir) {
    return CorpusPaths{dir / "logon.csv", dir / "device.csv", dir / "file.csv", dir / "email.csv",
                       dir / "http.csv"};
}

IngestResult ingest_corpus(const CorpusPaths& paths, RowPolicy policy) {
    struct Job {
        std::filesystem::path path;
        LogKind kind;
        UserDayGroups groups;
        ParseStats stats;
        std::exception_ptr error;
    };
    Job jobs[5] = {{paths.logon, LogKind::logon, {}, {}, nullptr},
                   {paths.device, LogKind::device, {}, {}, nullptr},
                   {paths.file, LogKind::file, {}, {}, nullptr},
                   {paths.email, LogKind::email, {}, {}, nullptr},
                   {paths.http, LogKind::http, {}, {}, nullptr}};

    std::vector<std::thread> workers;
    workers.reserve(5);
    for (auto& job : jobs) {
        workers.emplace_back([&job, policy] {
            try {
                job.stats = parse_log_file(job.path, job.kind, policy,
                                           [&job](EventRecord&& ev) { add_to_groups(job.groups, std::move(ev)); });
            } catch (...) {
                job.error = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (const auto& job : jobs)
        if (job.error) std::rethrow_exception(job.error);

    IngestResult result;
    for (int i = 0; i < 5; ++i) {
        result.per_file[i] = jobs[i].stats;
        result.total_events += jobs[i].stats.rows;
        merge_groups(result.groups, std::move(jobs[i].groups));
    }
    finalize_groups(result.groups);
    return result;
}

}  // namespace itd
