#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "itd/timestamp.hpp"

namespace itd {

enum class EventKind {
    logon,
    logoff,
    device_connect,
    device_disconnect,
    file,
    email,
    http,
};

std::string_view to_string(EventKind kind);

// The five source files.
enum class LogKind { logon, device, file, email, http };

std::string_view to_string(LogKind kind);

struct FilePayload {
    std::string filename;
};

struct EmailPayload {
    std::vector<std::string> to;
    std::vector<std::string> cc;
    std::vector<std::string> bcc;
    std::string from;
    std::uint64_t size_bytes = 0;
    int attachments = 0;
};

struct HttpPayload {
    std::string url;
};

using EventPayload = std::variant<std::monostate, FilePayload, EmailPayload, HttpPayload>;

// One parsed audit-log row. `kind` determines which payload alternative holds.
struct EventRecord {
    std::string id;
    Timestamp when;
    std::string user;
    std::string pc;
    EventKind kind = EventKind::logon;
    EventPayload payload;
};

// Set of (user, date) pairs designated malicious.
class GroundTruth {
  public:
    void insert(std::string user, Date date) { entries_.emplace(std::move(user), date); }

    bool is_malicious(const std::string& user, Date date) const {
        return entries_.count({user, date}) > 0;
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const std::set<std::pair<std::string, Date>>& entries() const { return entries_; }

  private:
    std::set<std::pair<std::string, Date>> entries_;
};

}  // namespace itd
