#include "itd/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <set>

#include "itd/csv.hpp"

namespace itd {

namespace {

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// domain of an address: everything after the last '@', lowercased
std::string address_domain(std::string_view address) {
    const std::size_t at = address.rfind('@');
    if (at == std::string_view::npos) return {};
    return lowercase(address.substr(at + 1));
}

}  // namespace

std::string_view feature_name(int slot) { return kFeatureNames[static_cast<std::size_t>(slot)]; }

std::string OfficeHours::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d:%02d-%02d:%02d", start.hour, start.minute, end.hour,
                  end.minute);
    return buf;
}

OfficeHours OfficeHours::parse(std::string_view text) {
    auto bad = [&] { throw Error("bad office hours \"" + std::string(text) + "\", want HH:MM-HH:MM"); };
    if (text.size() != 11 || text[5] != '-') bad();
    auto two = [&](std::size_t pos) {
        if (!std::isdigit(static_cast<unsigned char>(text[pos])) ||
            !std::isdigit(static_cast<unsigned char>(text[pos + 1])))
            bad();
        return (text[pos] - '0') * 10 + (text[pos + 1] - '0');
    };
    if (text[2] != ':' || text[8] != ':') bad();
    OfficeHours hours;
    hours.start = TimeOfDay{two(0), two(3), 0};
    hours.end = TimeOfDay{two(6), two(9), 0};
    if (hours.start.hour > 23 || hours.end.hour > 23 || hours.start.minute > 59 ||
        hours.end.minute > 59 || !(hours.start < hours.end))
        bad();
    return hours;
}

std::array<double, 9> extract_logon_features(std::span<const EventRecord> events,
                                             const OfficeHours& hours) {
    std::array<double, 9> f{};
    if (events.empty()) return f;

    int logons = 0, logoffs = 0, outside_logons = 0;
    std::set<std::string_view> pcs;
    double first_logon_hour = -1.0, last_logoff_hour = 0.0;
    double session_seconds = 0.0;
    int sessions = 0, sessions_outside = 0;

    // open logon times per pc, FIFO
    std::map<std::string_view, std::deque<int>> open;
    constexpr int kEndOfDay = 23 * 3600 + 59 * 60 + 59;

    for (const auto& ev : events) {
        pcs.insert(ev.pc);
        const int t = ev.when.time.seconds_since_midnight();
        if (ev.kind == EventKind::logon) {
            ++logons;
            ++sessions;
            if (!hours.contains(ev.when.time)) {
                ++outside_logons;
                ++sessions_outside;
            }
            if (first_logon_hour < 0.0) first_logon_hour = ev.when.time.fractional_hours();
            open[ev.pc].push_back(t);
        } else if (ev.kind == EventKind::logoff) {
            ++logoffs;
            last_logoff_hour = ev.when.time.fractional_hours();
            auto it = open.find(ev.pc);
            if (it != open.end() && !it->second.empty()) {
                session_seconds += t - it->second.front();
                it->second.pop_front();
            }
            // unmatched logoff: ignored
        }
    }
    for (const auto& [pc, starts] : open)
        for (const int start : starts) session_seconds += kEndOfDay - start;

    f[0] = logons;
    f[1] = logoffs;
    f[2] = static_cast<double>(pcs.size());
    f[3] = outside_logons;
    f[4] = session_seconds / 3600.0;
    f[5] = sessions;
    f[6] = sessions_outside;
    f[7] = first_logon_hour < 0.0 ? 0.0 : first_logon_hour;
    f[8] = last_logoff_hour;
    return f;
}

std::array<double, 5> extract_email_features(std::span<const EventRecord> events,
                                             std::string_view user_addr) {
    std::array<double, 5> f{};
    const std::string org_domain = address_domain(user_addr);
    std::set<std::string> external_recipients;

    for (const auto& ev : events) {
        const auto* mail = std::get_if<EmailPayload>(&ev.payload);
        if (!mail) continue;
        if (mail->from == user_addr) {
            f[0] += 1.0;  // E1 sent
            f[3] += static_cast<double>(mail->size_bytes);
            if (mail->attachments > 0) f[4] += 1.0;
            for (const auto* list : {&mail->to, &mail->cc, &mail->bcc})
                for (const auto& addr : *list)
                    if (address_domain(addr) != org_domain) external_recipients.insert(lowercase(addr));
        } else {
            f[1] += 1.0;  // E2 received
        }
    }
    f[2] = static_cast<double>(external_recipients.size());
    return f;
}

double extract_file_features(std::span<const EventRecord> events) {
    return static_cast<double>(events.size());
}

std::array<double, 3> extract_device_features(std::span<const EventRecord> events,
                                              const OfficeHours& hours) {
    std::array<double, 3> f{};
    std::set<std::string_view> pcs;
    for (const auto& ev : events) {
        if (ev.kind != EventKind::device_connect && ev.kind != EventKind::device_disconnect) continue;
        pcs.insert(ev.pc);
        if (ev.kind == EventKind::device_connect) {
            f[0] += 1.0;
            if (!hours.contains(ev.when.time)) f[1] += 1.0;
        }
    }
    f[2] = static_cast<double>(pcs.size());
    return f;
}

std::string url_host(std::string_view url) {
    // strip scheme
    const std::size_t scheme = url.find("://");
    if (scheme != std::string_view::npos) url.remove_prefix(scheme + 3);
    // strip path
    const std::size_t slash = url.find('/');
    if (slash != std::string_view::npos) url = url.substr(0, slash);
    // strip userinfo and port
    const std::size_t at = url.rfind('@');
    if (at != std::string_view::npos) url.remove_prefix(at + 1);
    const std::size_t colon = url.find(':');
    if (colon != std::string_view::npos) url = url.substr(0, colon);
    return lowercase(url);
}

std::array<double, 3> extract_http_features(std::span<const EventRecord> events,
                                            const OfficeHours& hours) {
    std::array<double, 3> f{};
    std::set<std::string> hosts;
    for (const auto& ev : events) {
        const auto* req = std::get_if<HttpPayload>(&ev.payload);
        if (!req) continue;
        f[0] += 1.0;
        if (!hours.contains(ev.when.time)) f[2] += 1.0;
        const std::string host = url_host(req->url);
        if (!host.empty()) hosts.insert(host);  // unparseable urls still count above
    }
    f[1] = static_cast<double>(hosts.size());
    return f;
}

FeatureVector assemble_vector(std::span<const EventRecord> day_events, const OfficeHours& hours,
                              std::string_view user_addr) {
    std::vector<EventRecord> sorted(day_events.begin(), day_events.end());
    std::sort(sorted.begin(), sorted.end(), [](const EventRecord& a, const EventRecord& b) {
        if (a.when != b.when) return a.when < b.when;
        return a.id < b.id;
    });

    std::vector<EventRecord> logon, email, file, device, http;
    for (auto& ev : sorted) {
        switch (ev.kind) {
            case EventKind::logon:
            case EventKind::logoff: logon.push_back(std::move(ev)); break;
            case EventKind::email: email.push_back(std::move(ev)); break;
            case EventKind::file: file.push_back(std::move(ev)); break;
            case EventKind::device_connect:
            case EventKind::device_disconnect: device.push_back(std::move(ev)); break;
            case EventKind::http: http.push_back(std::move(ev)); break;
        }
    }

    const auto l = extract_logon_features(logon, hours);
    const auto e = extract_email_features(email, user_addr);
    const double f1 = extract_file_features(file);
    const auto d = extract_device_features(device, hours);
    const auto h = extract_http_features(http, hours);

    FeatureVector v;
    v.scale = FeatureScale::raw;
    std::size_t k = 0;
    for (const double x : l) v[k++] = x;
    for (const double x : e) v[k++] = x;
    v[k++] = f1;
    for (const double x : d) v[k++] = x;
    v[k++] = h[0];
    v[k++] = h[1];
    return v;
}

std::string user_address(std::string_view user, std::string_view org_domain,
                         const AddressMap& addresses) {
    if (const auto it = addresses.find(user); it != addresses.end()) return it->second;
    return std::string(user) + "@" + std::string(org_domain);
}

std::vector<FeatureRow> extract_feature_matrix(const UserDayGroups& groups, const OfficeHours& hours,
                                               std::string_view org_domain,
                                               const AddressMap& addresses) {
    std::vector<FeatureRow> rows;
    rows.reserve(groups.size());
    for (const auto& [key, events] : groups) {
        FeatureRow row;
        row.user = key.user;
        row.date = key.date;
        row.features = assemble_vector(events, hours, user_address(key.user, org_domain, addresses));
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

// decimal text, at most 6 fractional digits, trailing zeros trimmed
std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

}  // namespace

void write_feature_csv(const std::filesystem::path& path, std::span<const FeatureRow> rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());

    out << "user,date";
    for (const auto name : kFeatureNames) out << ',' << name;
    out << ",label\n";

    for (const auto& row : rows) {
        out << csv_quote(row.user) << ',' << row.date.to_string();
        for (const double v : row.features.values) out << ',' << format_value(v);
        out << ',' << (row.malicious ? '1' : '0') << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path,
                                         FeatureScale expected_scale) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    CsvReader reader(in);
    const auto header = reader.next_row();
    if (!header || header->size() != 2 + kFeatureCount + 1)
        throw FeatureCsvError(path.string() + ": bad feature csv header");

    std::vector<FeatureRow> rows;
    while (auto fields = reader.next_row()) {
        if (fields->size() == 1 && (*fields)[0].empty()) continue;
        if (fields->size() != 2 + kFeatureCount + 1)
            throw FeatureCsvError(path.string() + " line " + std::to_string(reader.row_start_line()) +
                                  ": wrong column count");
        FeatureRow row;
        row.user = (*fields)[0];
        const auto date = Date::try_parse((*fields)[1]);
        if (!date)
            throw FeatureCsvError(path.string() + " line " + std::to_string(reader.row_start_line()) +
                                  ": bad date");
        row.date = *date;
        for (int k = 0; k < kFeatureCount; ++k) {
            const std::string& text = (*fields)[2 + static_cast<std::size_t>(k)];
            try {
                row.features[static_cast<std::size_t>(k)] = std::stod(text);
            } catch (const std::exception&) {
                throw FeatureCsvError(path.string() + " line " +
                                      std::to_string(reader.row_start_line()) + ": bad value \"" +
                                      text + "\"");
            }
        }
        row.features.scale = expected_scale;
        const std::string& label = (*fields)[2 + kFeatureCount];
        if (label == "1") row.malicious = true;
        else if (label == "0") row.malicious = false;
        else
            throw FeatureCsvError(path.string() + " line " + std::to_string(reader.row_start_line()) +
                                  ": bad label \"" + label + "\"");
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace itd
