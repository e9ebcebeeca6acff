#include "itd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "itd/csv.hpp"

namespace itd {

namespace {

std::string trim(std::string_view s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

struct KeyParser {
    const std::filesystem::path& path;
    std::size_t line;
    const std::string& value;

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError(path.string() + " line " + std::to_string(line) + ": " + why);
    }
    std::string str() const { return unquote(value); }
    double num() const {
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) fail("bad number \"" + value + "\"");
            return v;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("bad number \"" + value + "\"");
        }
    }
    std::int64_t integer() const {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(value, &used);
            if (used != value.size()) fail("bad integer \"" + value + "\"");
            return v;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("bad integer \"" + value + "\"");
        }
    }
    std::uint64_t u64() const {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(value, &used);
            if (used != value.size()) fail("bad seed \"" + value + "\"");
            return v;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("bad seed \"" + value + "\"");
        }
    }
};

void apply_freeze_mode_text(TrainConfig& train, const std::string& text, const KeyParser& kp) {
    if (text == "full") {
        train.mode = FreezeMode::full;
    } else if (text == "feature-extraction") {
        train.mode = FreezeMode::feature_extraction;
    } else if (text.rfind("fine-tune", 0) == 0) {
        train.mode = FreezeMode::fine_tune;
        train.fine_tune_layers = 1;
        if (text.size() > 9) {
            if (text[9] != ':') kp.fail("bad freeze_mode \"" + text + "\"");
            try {
                train.fine_tune_layers = std::stoi(text.substr(10));
            } catch (const std::exception&) {
                kp.fail("bad freeze_mode \"" + text + "\"");
            }
        }
    } else {
        kp.fail("bad freeze_mode \"" + text + "\" (full, feature-extraction, fine-tune:k)");
    }
}

std::string freeze_mode_text(const TrainConfig& train) {
    switch (train.mode) {
        case FreezeMode::full: return "full";
        case FreezeMode::feature_extraction: return "feature-extraction";
        case FreezeMode::fine_tune: return "fine-tune:" + std::to_string(train.fine_tune_layers);
    }
    return "full";
}

}  // namespace

std::filesystem::path PipelineConfig::effective_logs_dir() const {
    if (!logs_dir.empty()) return logs_dir;
    return std::filesystem::path(out_dir) / "logs";
}

std::filesystem::path PipelineConfig::effective_ground_truth() const {
    if (!ground_truth.empty()) return ground_truth;
    return effective_logs_dir() / "ground_truth.csv";
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());

    PipelineConfig config;
    std::string section;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;

        if (text.front() == '[') {
            if (text.back() != ']')
                throw ConfigError(path.string() + " line " + std::to_string(line_no) +
                                  ": unterminated section header");
            section = trim(text.substr(1, text.size() - 2));
            static const char* kSections[] = {"data", "org", "synth", "prepare", "train", "output"};
            if (std::find_if(std::begin(kSections), std::end(kSections),
                             [&](const char* s) { return section == s; }) == std::end(kSections))
                throw ConfigError(path.string() + " line " + std::to_string(line_no) +
                                  ": unknown section [" + section + "]");
            continue;
        }

        const std::size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + " line " + std::to_string(line_no) +
                              ": expected key = value");
        const std::string key = section + "." + trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        const KeyParser kp{path, line_no, value};

        if (key == "data.logs_dir") config.logs_dir = kp.str();
        else if (key == "data.ground_truth") config.ground_truth = kp.str();
        else if (key == "data.cert_dir") config.cert_dir = kp.str();
        else if (key == "org.domain") config.org_domain = kp.str();
        else if (key == "org.office_hours") {
            try {
                config.office_hours = OfficeHours::parse(kp.str());
            } catch (const Error& e) {
                kp.fail(e.what());
            }
        }
        else if (key == "org.address_map") config.address_map = kp.str();
        else if (key == "synth.users") config.synth.users = static_cast<int>(kp.integer());
        else if (key == "synth.days") config.synth.days = static_cast<int>(kp.integer());
        else if (key == "synth.seed") config.synth.seed = kp.u64();
        else if (key == "synth.malicious_fraction") config.synth.malicious_fraction = kp.num();
        else if (key == "prepare.train_fraction") config.train_fraction = kp.num();
        else if (key == "prepare.undersample_ratio") config.undersample_ratio = kp.num();
        else if (key == "prepare.split_seed") config.split_seed = kp.u64();
        else if (key == "prepare.sample_seed") config.sample_seed = kp.u64();
        else if (key == "train.learning_rate") config.train.learning_rate = kp.num();
        else if (key == "train.beta1") config.train.beta1 = kp.num();
        else if (key == "train.beta2") config.train.beta2 = kp.num();
        else if (key == "train.epsilon") config.train.epsilon = kp.num();
        else if (key == "train.batch_size") config.train.batch_size = static_cast<int>(kp.integer());
        else if (key == "train.epochs") config.train.epochs = static_cast<int>(kp.integer());
        else if (key == "train.shuffle_seed") config.train.seed = kp.u64();
        else if (key == "train.init_seed") config.init_seed = kp.u64();
        else if (key == "train.freeze_mode") apply_freeze_mode_text(config.train, kp.str(), kp);
        else if (key == "train.init_from") config.init_from = kp.str();
        else if (key == "train.workers") config.train.workers = static_cast<int>(kp.integer());
        else if (key == "output.dir") config.out_dir = kp.str();
        else
            throw ConfigError(path.string() + " line " + std::to_string(line_no) +
                              ": unknown key \"" + key + "\"");
    }
    return config;
}

std::string canonical_config_text(const PipelineConfig& c) {
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        return std::string(buf);
    };
    std::map<std::string, std::string> kv;
    kv["data.logs_dir"] = c.logs_dir;
    kv["data.ground_truth"] = c.ground_truth;
    kv["data.cert_dir"] = c.cert_dir;
    kv["org.domain"] = c.org_domain;
    kv["org.office_hours"] = c.office_hours.to_string();
    kv["org.address_map"] = c.address_map;
    kv["synth.users"] = std::to_string(c.synth.users);
    kv["synth.days"] = std::to_string(c.synth.days);
    kv["synth.seed"] = std::to_string(c.synth.seed);
    kv["synth.malicious_fraction"] = fmt(c.synth.malicious_fraction);
    kv["synth.start_date"] = c.synth.start_date.to_string();
    kv["prepare.train_fraction"] = fmt(c.train_fraction);
    kv["prepare.undersample_ratio"] = fmt(c.undersample_ratio);
    kv["prepare.split_seed"] = std::to_string(c.split_seed);
    kv["prepare.sample_seed"] = std::to_string(c.sample_seed);
    kv["train.learning_rate"] = fmt(c.train.learning_rate);
    kv["train.beta1"] = fmt(c.train.beta1);
    kv["train.beta2"] = fmt(c.train.beta2);
    kv["train.epsilon"] = fmt(c.train.epsilon);
    kv["train.batch_size"] = std::to_string(c.train.batch_size);
    kv["train.epochs"] = std::to_string(c.train.epochs);
    kv["train.shuffle_seed"] = std::to_string(c.train.seed);
    kv["train.init_seed"] = std::to_string(c.init_seed);
    kv["train.freeze_mode"] = freeze_mode_text(c.train);
    kv["train.init_from"] = c.init_from;
    kv["output.dir"] = c.out_dir;

    std::ostringstream out;
    for (const auto& [key, value] : kv) out << key << '=' << value << '\n';
    return out.str();
}

std::string config_hash(const PipelineConfig& config) {
    const std::string text = canonical_config_text(config);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

AddressMap load_address_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    CsvReader reader(in);
    AddressMap map;
    bool first = true;
    while (auto row = reader.next_row()) {
        if (row->size() == 1 && (*row)[0].empty()) continue;
        if (first && (*row)[0] == "user") {
            first = false;
            continue;
        }
        first = false;
        if (row->size() != 2) throw Error(path.string() + ": address map rows need user,address");
        map[(*row)[0]] = (*row)[1];
    }
    return map;
}

}  // namespace itd
