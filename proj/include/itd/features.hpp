#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "itd/error.hpp"
#include "itd/events.hpp"
#include "itd/ingest.hpp"

namespace itd {

inline constexpr int kFeatureCount = 20;

// Fixed slot order. The http family contributes its request and distinct-host
// counts; the extractor also reports an after-hours request count (H3) that
// does not occupy a vector slot.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "L1", "L2", "L3", "L4", "L5", "L6", "L7", "L8", "L9", "E1",
    "E2", "E3", "E4", "E5", "F1", "D1", "D2", "D3", "H1", "H2",
};

enum class FeatureScale { raw, normalized };

// The 20 per-user-per-day features, raw or normalized.
struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    FeatureScale scale = FeatureScale::raw;

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

std::string_view feature_name(int slot);

// start <= t < end counts as inside office hours.
struct OfficeHours {
    TimeOfDay start{8, 0, 0};
    TimeOfDay end{17, 0, 0};

    bool contains(TimeOfDay t) const { return start <= t && t < end; }

    std::string to_string() const;                     // HH:MM-HH:MM
    static OfficeHours parse(std::string_view text);   // throws Error
};

// Logon family over one user-day's logon/logoff events (time-sorted):
//   L1 logons, L2 logoffs, L3 distinct pcs, L4 logons outside hours,
//   L5 total session hours, L6 sessions, L7 sessions starting outside hours,
//   L8 first logon hour, L9 last logoff hour.
// Sessions pair logon -> next logoff FIFO per pc; an unmatched logon closes
// at 23:59:59, an unmatched logoff is ignored.
std::array<double, 9> extract_logon_features(std::span<const EventRecord> events,
                                             const OfficeHours& hours);

// Email family: E1 sent, E2 received, E3 distinct external recipients of
// sent mail, E4 bytes sent, E5 sent with attachments. A mail counts as sent
// iff its from-address equals `user_address`; the organization domain is the
// domain of `user_address`.
std::array<double, 5> extract_email_features(std::span<const EventRecord> events,
                                             std::string_view user_address);

// F1: file event count.
double extract_file_features(std::span<const EventRecord> events);

// Device family: D1 connects, D2 connects outside hours, D3 distinct pcs
// with device activity.
std::array<double, 3> extract_device_features(std::span<const EventRecord> events,
                                              const OfficeHours& hours);

// Http family: H1 requests, H2 distinct hosts (lowercased), H3 requests
// outside hours. A request whose url yields no host still counts for H1/H3.
std::array<double, 3> extract_http_features(std::span<const EventRecord> events,
                                            const OfficeHours& hours);

// Lowercased host portion of a url; empty when unparseable.
std::string url_host(std::string_view url);

// Concatenates the family outputs in slot order; families absent from the
// day contribute zeros. Events may arrive in any order and any kind mix.
FeatureVector assemble_vector(std::span<const EventRecord> day_events, const OfficeHours& hours,
                              std::string_view user_address);

// One feature-matrix row. label: false = non-malicious, true = malicious.
struct FeatureRow {
    std::string user;
    Date date;
    FeatureVector features;
    bool malicious = false;
};

// user id -> mail address; users not present fall back to user@org_domain.
using AddressMap = std::map<std::string, std::string, std::less<>>;

std::string user_address(std::string_view user, std::string_view org_domain,
                         const AddressMap& addresses);

// Feature matrix for every group, rows ordered by (user, date).
std::vector<FeatureRow> extract_feature_matrix(const UserDayGroups& groups, const OfficeHours& hours,
                                               std::string_view org_domain,
                                               const AddressMap& addresses = {});

struct FeatureCsvError : Error {
    using Error::Error;
};

// CSV schema: user,date,<the 20 slot names>,label with values printed to at
// most 6 fractional digits.
void write_feature_csv(const std::filesystem::path& path, std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path,
                                         FeatureScale expected_scale);

}  // namespace itd
