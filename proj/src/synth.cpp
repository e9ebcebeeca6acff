#include "itd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "itd/rng.hpp"

namespace itd {

namespace {

constexpr int kHttpDomains = 60;
constexpr int kExfilDomains = 5;

TimeOfDay time_from_hours(double hours) {
    long seconds = std::lround(hours * 3600.0);
    seconds = std::clamp(seconds, 0L, 86399L);
    return TimeOfDay{static_cast<int>(seconds / 3600), static_cast<int>((seconds / 60) % 60),
                     static_cast<int>(seconds % 60)};
}

struct Profile {
    double logon_mu = 8.5;
    double length_mu = 8.5;
    double mail_rate = 3.0;
    double recv_rate = 5.0;
    double file_rate = 4.0;
    double http_rate = 15.0;
    bool has_usb = false;
    double second_pc_prob = 0.05;
    double night_noise_prob = 0.02;
    double lunch_prob = 0.25;
    double external_mail_prob = 0.04;
    std::vector<int> domains;  // indices into the shared domain pool
};

Profile draw_profile(Rng& rng) {
    Profile p;
    p.logon_mu = rng.uniform(7.75, 9.25);
    p.length_mu = rng.uniform(7.5, 9.5);
    p.mail_rate = rng.uniform(1.0, 6.0);
    p.recv_rate = rng.uniform(2.0, 8.0);
    p.file_rate = rng.uniform(1.0, 8.0);
    p.http_rate = rng.uniform(8.0, 25.0);
    p.has_usb = rng.bernoulli(0.3);
    const int domain_count = 5 + static_cast<int>(rng.below(6));
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < domain_count)
        chosen.insert(static_cast<int>(rng.below(kHttpDomains)));
    p.domains.assign(chosen.begin(), chosen.end());
    return p;
}

struct FileRow {
    std::int64_t t = 0;       // seconds since epoch-ish ordering key
    std::uint64_t seq = 0;    // generation order tiebreak
    std::string rest;         // columns after the id
};

struct RowBuffers {
    std::vector<FileRow> logon, device, file, email, http;
    std::uint64_t seq = 0;

    void push(std::vector<FileRow>& dst, const Timestamp& when, std::string rest) {
        dst.push_back({when.date.civil_days() * 86400 +
                           static_cast<std::int64_t>(when.time.seconds_since_midnight()),
                       seq++, std::move(rest)});
    }
};

std::string user_id(int u) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "U%04d", u + 1);
    return buf;
}

std::string pc_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "PC-%04d", index + 1);
    return buf;
}

std::string user_mail(int u) { return user_id(u) + "@dtaa.com"; }

std::string http_domain(int k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "www.site%02d.com", k);
    return buf;
}

std::string exfil_domain(int k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fileshare%d.net", k);
    return buf;
}

std::string random_token(Rng& rng) {
    static constexpr char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::string token(8, 'a');
    for (auto& ch : token) ch = alphabet[rng.below(sizeof(alphabet) - 1)];
    return token;
}

std::string random_filename(Rng& rng) {
    static constexpr const char* ext[] = {".doc", ".pdf", ".zip", ".xlsx", ".txt"};
    return random_token(rng) + ext[rng.below(5)];
}

std::string join_addresses(const std::vector<std::string>& list) {
    std::string out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (i) out += ';';
        out += list[i];
    }
    return out;
}

std::string csv_email_rest(const std::string& user, const std::string& pc,
                           const std::vector<std::string>& to, const std::vector<std::string>& cc,
                           const std::vector<std::string>& bcc, const std::string& from,
                           std::uint64_t size, int attachments) {
    return user + "," + pc + "," + join_addresses(to) + "," + join_addresses(cc) + "," +
           join_addresses(bcc) + "," + from + "," + std::to_string(size) + "," +
           std::to_string(attachments) + ",";
}

void write_file(const std::filesystem::path& path, const char* header, const char* id_prefix,
                std::vector<FileRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const FileRow& a, const FileRow& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.seq < b.seq;
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << header << '\n';
    char id[24];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::snprintf(id, sizeof(id), "{%s%08zu}", id_prefix, i + 1);
        out << id << ',' << rows[i].rest << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void ScenarioConfig::validate() const {
    if (users <= 0 || days <= 0) throw Error("scenario users/days must be positive");
    if (!(malicious_fraction > 0.0 && malicious_fraction < 0.5))
        throw Error("malicious_fraction must lie in (0, 0.5)");
}

ScenarioResult generate_scenario(const ScenarioConfig& config,
                                 const std::filesystem::path& out_dir) {
    config.validate();
    std::filesystem::create_directories(out_dir);

    const Rng root(config.seed);

    std::vector<Profile> profiles;
    profiles.reserve(static_cast<std::size_t>(config.users));
    for (int u = 0; u < config.users; ++u) {
        Rng rng = root.fork(0x100000ULL + static_cast<std::uint64_t>(u));
        profiles.push_back(draw_profile(rng));
    }

    // activity calendar: weekdays minus a small absence rate
    std::vector<std::pair<int, int>> active;  // (user, day index)
    for (int u = 0; u < config.users; ++u) {
        Rng rng = root.fork(0x200000ULL + static_cast<std::uint64_t>(u));
        for (int d = 0; d < config.days; ++d) {
            const Date date = config.start_date.plus_days(d);
            const int wd = date.weekday();
            const bool weekday = wd >= 1 && wd <= 5;
            const bool absent = rng.bernoulli(0.03);
            if (weekday && !absent) active.emplace_back(u, d);
        }
    }

    // injected malicious user-days, exact count, sampled over active days
    const auto target = static_cast<std::size_t>(std::llround(
        static_cast<double>(active.size()) * config.malicious_fraction));
    const std::size_t mal_count = std::max<std::size_t>(1, std::min(target, active.size()));
    Rng pick_rng = root.fork(0x300000ULL);
    std::vector<std::size_t> picks = pick_rng.sample_indices(active.size(), mal_count);
    std::set<std::pair<int, int>> malicious_days;
    for (const std::size_t p : picks) malicious_days.insert(active[p]);

    RowBuffers rows;
    std::vector<std::pair<std::string, Date>> truth;

    for (const auto& [u, d] : active) {
        const Date date = config.start_date.plus_days(d);
        const Profile& prof = profiles[static_cast<std::size_t>(u)];
        Rng rng = root.fork(0x400000ULL + static_cast<std::uint64_t>(u) * 131071ULL +
                            static_cast<std::uint64_t>(d));

        const std::string user = user_id(u);
        const std::string own_pc = pc_id(u);

        const double t0 = std::clamp(rng.normal(prof.logon_mu, 0.3), 5.0, 11.5);
        const double length = std::clamp(rng.normal(prof.length_mu, 0.7), 4.0, 10.0);
        const double t1 = std::min(t0 + length, 23.75);

        auto logon_row = [&](double hours, const std::string& pc, const char* activity) {
            const Timestamp when{date, time_from_hours(hours)};
            rows.push(rows.logon, when,
                      when.to_string() + "," + user + "," + pc + "," + activity);
        };
        auto device_row = [&](double hours, const std::string& pc, const char* activity) {
            const Timestamp when{date, time_from_hours(hours)};
            rows.push(rows.device, when,
                      when.to_string() + "," + user + "," + pc + "," + activity);
        };
        auto file_row = [&](double hours, const std::string& pc) {
            const Timestamp when{date, time_from_hours(hours)};
            rows.push(rows.file, when,
                      when.to_string() + "," + user + "," + pc + "," + random_filename(rng) + ",");
        };
        auto http_row = [&](double hours, const std::string& pc, const std::string& domain) {
            const Timestamp when{date, time_from_hours(hours)};
            rows.push(rows.http, when, when.to_string() + "," + user + "," + pc + ",http://" +
                                           domain + "/" + random_token(rng) + ",");
        };
        auto email_row = [&](double hours, const std::string& pc, const std::vector<std::string>& to,
                             const std::vector<std::string>& cc, const std::string& from,
                             std::uint64_t size, int attachments) {
            const Timestamp when{date, time_from_hours(hours)};
            rows.push(rows.email, when,
                      when.to_string() + "," +
                          csv_email_rest(user, pc, to, cc, {}, from, size, attachments));
        };
        auto other_user_mail = [&] {
            int other = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.users)));
            if (other == u) other = (other + 1) % config.users;
            return user_mail(other);
        };

        // ordinary workday
        logon_row(t0, own_pc, "Logon");
        if (rng.bernoulli(prof.lunch_prob) && t1 - t0 > 5.0) {
            const double lunch_out = 12.0 + rng.uniform(0.0, 0.5);
            const double lunch_in = lunch_out + rng.uniform(0.4, 1.0);
            if (lunch_out > t0 + 1.0 && lunch_in < t1 - 1.0) {
                logon_row(lunch_out, own_pc, "Logoff");
                logon_row(lunch_in, own_pc, "Logon");
            }
        }
        logon_row(t1, own_pc, "Logoff");

        if (rng.bernoulli(prof.second_pc_prob)) {
            int other = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.users)));
            if (other == u) other = (other + 1) % config.users;
            const double start = rng.uniform(t0 + 0.5, std::max(t0 + 0.6, t1 - 1.5));
            const double stop = start + rng.uniform(0.5, 1.5);
            logon_row(start, pc_id(other), "Logon");
            logon_row(std::min(stop, t1), pc_id(other), "Logoff");
        }

        if (rng.bernoulli(prof.night_noise_prob)) {
            const double start = rng.uniform(19.0, 21.5);
            logon_row(start, own_pc, "Logon");
            logon_row(start + rng.uniform(0.2, 1.0), own_pc, "Logoff");
        }

        const int sent = rng.poisson(prof.mail_rate);
        for (int i = 0; i < sent; ++i) {
            std::vector<std::string> to;
            const int recipients = 1 + static_cast<int>(rng.below(3));
            for (int r = 0; r < recipients; ++r) to.push_back(other_user_mail());
            if (rng.bernoulli(prof.external_mail_prob)) {
                static constexpr const char* kExternal[] = {"gmail.com", "yahoo.com", "hotmail.com"};
                to[0] = random_token(rng) + "@" + kExternal[rng.below(3)];
            }
            std::vector<std::string> cc;
            if (rng.bernoulli(0.3)) cc.push_back(other_user_mail());
            const double x = rng.uniform();
            const auto size = static_cast<std::uint64_t>(200.0 + x * x * 30000.0);
            const int attachments = rng.bernoulli(0.25) ? 1 + static_cast<int>(rng.below(3)) : 0;
            email_row(rng.uniform(t0, t1), own_pc, to, cc, user_mail(u), size, attachments);
        }
        const int received = rng.poisson(prof.recv_rate);
        for (int i = 0; i < received; ++i) {
            const double x = rng.uniform();
            email_row(rng.uniform(t0, t1), own_pc, {user_mail(u)}, {}, other_user_mail(),
                      static_cast<std::uint64_t>(200.0 + x * x * 30000.0),
                      rng.bernoulli(0.2) ? 1 : 0);
        }

        const int file_events = rng.poisson(prof.file_rate);
        for (int i = 0; i < file_events; ++i) file_row(rng.uniform(t0, t1), own_pc);

        if (prof.has_usb && rng.bernoulli(0.4)) {
            const double start = rng.uniform(t0, std::max(t0 + 0.1, t1 - 1.0));
            device_row(start, own_pc, "Connect");
            device_row(start + rng.uniform(0.1, 1.0), own_pc, "Disconnect");
        }

        const int requests = rng.poisson(prof.http_rate);
        for (int i = 0; i < requests; ++i) {
            const int k = prof.domains[rng.below(prof.domains.size())];
            http_row(rng.uniform(t0, t1), own_pc, http_domain(k));
        }

        // injected after-hours burst
        if (malicious_days.count({u, d})) {
            const double ws = rng.uniform(21.5, 22.5);
            const std::string pc = rng.bernoulli(0.4)
                                       ? pc_id(static_cast<int>(rng.below(
                                             static_cast<std::uint64_t>(config.users))))
                                       : own_pc;
            truth.emplace_back(user, date);
            logon_row(ws, pc, "Logon");

            const int connects = 3 + static_cast<int>(rng.below(3));
            for (int i = 0; i < connects; ++i) {
                const double t = ws + rng.uniform(0.02, 1.2);
                device_row(t, pc, "Connect");
                device_row(t + rng.uniform(0.05, 0.25), pc, "Disconnect");
            }
            const int copies = 2 + static_cast<int>(rng.below(4));
            for (int i = 0; i < copies; ++i) file_row(ws + rng.uniform(0.0, 1.2), pc);

            const int mails = 1 + static_cast<int>(rng.below(3));
            for (int i = 0; i < mails; ++i) {
                const std::string drop = random_token(rng) + "@" +
                                         exfil_domain(static_cast<int>(rng.below(kExfilDomains)));
                email_row(ws + rng.uniform(0.0, 1.2), pc, {drop}, {}, user_mail(u),
                          20000 + rng.below(70000), 1 + static_cast<int>(rng.below(3)));
            }
            const int exfil_requests = 3 + static_cast<int>(rng.below(6));
            for (int i = 0; i < exfil_requests; ++i)
                http_row(ws + rng.uniform(0.0, 1.2), pc,
                         exfil_domain(static_cast<int>(rng.below(kExfilDomains))));

            logon_row(std::min(ws + rng.uniform(1.3, 1.45), 23.95), pc, "Logoff");
        }
    }

    write_file(out_dir / "logon.csv", "id,date,user,pc,activity", "L", rows.logon);
    write_file(out_dir / "device.csv", "id,date,user,pc,activity", "D", rows.device);
    write_file(out_dir / "file.csv", "id,date,user,pc,filename,content", "F", rows.file);
    write_file(out_dir / "email.csv", "id,date,user,pc,to,cc,bcc,from,size,attachments,content", "E",
               rows.email);
    write_file(out_dir / "http.csv", "id,date,user,pc,url,content", "H", rows.http);

    std::sort(truth.begin(), truth.end());
    // one row per injected user-day, stamped with the burst start
    {
        std::ofstream out(out_dir / "ground_truth.csv", std::ios::binary);
        if (!out) throw IoError("cannot write ground_truth.csv");
        out << "user,date\n";
        for (const auto& [user, date] : truth) out << user << ',' << date.to_string() << '\n';
        if (!out) throw IoError("write failed: ground_truth.csv");
    }

    ScenarioResult result;
    result.active_user_days = active.size();
    result.event_count = rows.logon.size() + rows.device.size() + rows.file.size() +
                         rows.email.size() + rows.http.size();
    result.malicious = std::move(truth);
    return result;
}

}  // namespace itd
