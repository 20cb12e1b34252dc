#include "reflow/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace reflow {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

[[noreturn]] void fail(const std::string& context, const std::string& message) {
    throw Error(ErrorCode::config_error, context + ": " + message);
}

double to_double(const std::string& value, const std::string& context) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const double parsed = std::strtod(begin, &end);
    if (end == begin || *end != '\0') fail(context, "cannot parse '" + value + "' as a number");
    return parsed;
}

long long to_int(const std::string& value, const std::string& context) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const long long parsed = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0') fail(context, "cannot parse '" + value + "' as an integer");
    return parsed;
}

std::uint64_t to_u64(const std::string& value, const std::string& context) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0' || (!value.empty() && value[0] == '-')) {
        fail(context, "cannot parse '" + value + "' as a nonnegative integer");
    }
    return parsed;
}

bool to_bool(const std::string& value, const std::string& context) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    fail(context, "expected true/false, got '" + value + "'");
}

std::vector<std::string> split(const std::string& value, char sep) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        const std::size_t next = value.find(sep, pos);
        parts.push_back(trim(value.substr(
            pos, next == std::string::npos ? std::string::npos : next - pos)));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return parts;
}

std::vector<double> to_double_list(const std::string& value, const std::string& context) {
    std::vector<double> out;
    for (const std::string& part : split(value, ',')) {
        if (part.empty()) fail(context, "empty list element");
        out.push_back(to_double(part, context));
    }
    if (out.empty()) fail(context, "expected a nonempty list");
    return out;
}

std::vector<int> to_int_list(const std::string& value, const std::string& context) {
    std::vector<int> out;
    for (const std::string& part : split(value, ',')) {
        if (part.empty()) fail(context, "empty list element");
        out.push_back(static_cast<int>(to_int(part, context)));
    }
    if (out.empty()) fail(context, "expected a nonempty list");
    return out;
}

StateVector to_state(const std::string& value, const std::string& context) {
    return StateVector(to_double_list(value, context));
}

std::vector<StateVector> to_state_list(const std::string& value, const std::string& context) {
    std::vector<StateVector> out;
    for (const std::string& group : split(value, ';')) {
        if (group.empty()) fail(context, "empty target group");
        out.push_back(to_state(group, context));
    }
    return out;
}

// Returns the value for key, or nullopt; marks the key consumed for the
// unknown-key sweep afterwards.
class SectionReader {
public:
    SectionReader(const ParsedConfig::Section* section, std::string origin, std::string name)
        : section_(section), context_(std::move(origin) + ":" + std::move(name)) {}

    std::optional<std::string> get(const std::string& key) {
        if (!section_) return std::nullopt;
        for (const auto& [k, v] : *section_) {
            if (k == key) {
                consumed_.insert(key);
                return v;
            }
        }
        return std::nullopt;
    }

    std::string context(const std::string& key) const { return context_ + "." + key; }

    void check_consumed() const {
        if (!section_) return;
        for (const auto& [k, v] : *section_) {
            if (!consumed_.count(k)) fail(context_, "unknown key '" + k + "'");
        }
    }

private:
    const ParsedConfig::Section* section_;
    std::string context_;
    std::set<std::string> consumed_;
};

const std::set<std::string>& known_experiments() {
    static const std::set<std::string> names = {"order", "roundtrip", "multiturn",
                                                "prop1", "lqr-limit", "mask"};
    return names;
}

}  // namespace

const ParsedConfig::Section* ParsedConfig::find(const std::string& name) const {
    for (const auto& [section_name, section] : sections) {
        if (section_name == name) return &section;
    }
    return nullptr;
}

ParsedConfig parse_config_text(const std::string& text, const std::string& origin) {
    ParsedConfig parsed;
    std::istringstream in(text);
    std::string raw;
    int line_number = 0;
    ParsedConfig::Section* current = nullptr;
    std::string current_name;

    while (std::getline(in, raw)) {
        ++line_number;
        const std::string line = trim(raw);
        const std::string where = origin + ":" + std::to_string(line_number);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(where, "unterminated section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) fail(where, "empty section name");
            if (parsed.find(name)) fail(where, "duplicate section [" + name + "]");
            parsed.sections.emplace_back(name, ParsedConfig::Section{});
            current = &parsed.sections.back().second;
            current_name = name;
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(where, "expected key = value");
        if (!current) fail(where, "key outside any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(where, "empty key");
        for (const auto& [k, v] : *current) {
            if (k == key) fail(where, "duplicate key '" + key + "' in [" + current_name + "]");
        }
        current->emplace_back(key, value);
    }
    return parsed;
}

RunConfig RunConfig::load(const std::filesystem::path& path,
                          const std::string& expected_experiment) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open config " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string origin = path.string();
    ParsedConfig parsed = parse_config_text(buffer.str(), origin);

    for (const auto& [name, section] : parsed.sections) {
        if (name == "run" || name == "guidance" || name == "endpoints" || name == "mask") {
            continue;
        }
        if (name.rfind("profile:", 0) == 0 && name.size() > 8) continue;
        fail(origin, "unknown section [" + name + "]");
    }

    RunConfig config;
    bool dim_set = false;

    SectionReader run(parsed.find("run"), origin, "run");
    if (auto v = run.get("experiment")) {
        if (!known_experiments().count(*v)) {
            fail(run.context("experiment"), "unknown experiment '" + *v + "'");
        }
        config.experiment = *v;
    }
    if (auto v = run.get("dim")) {
        config.dim = static_cast<int>(to_int(*v, run.context("dim")));
        dim_set = true;
    }
    if (auto v = run.get("steps")) config.steps = static_cast<int>(to_int(*v, run.context("steps")));
    if (auto v = run.get("solver")) config.solver = parse_solver_kind(*v);
    if (auto v = run.get("solvers")) {
        config.solvers.clear();
        for (const std::string& part : split(*v, ',')) {
            config.solvers.push_back(parse_solver_kind(part));
        }
    }
    if (auto v = run.get("rounds")) config.rounds = static_cast<int>(to_int(*v, run.context("rounds")));
    if (auto v = run.get("seeds")) {
        config.seeds.clear();
        for (const std::string& part : split(*v, ',')) {
            config.seeds.push_back(to_u64(part, run.context("seeds")));
        }
    }
    if (auto v = run.get("n_list")) config.n_list = to_int_list(*v, run.context("n_list"));
    if (auto v = run.get("lambda_ladder")) {
        config.lambda_ladder = to_double_list(*v, run.context("lambda_ladder"));
    }
    if (auto v = run.get("target_counts")) {
        config.target_counts = to_int_list(*v, run.context("target_counts"));
    }
    if (auto v = run.get("control_samples")) {
        config.control_samples = static_cast<int>(to_int(*v, run.context("control_samples")));
    }
    if (auto v = run.get("x0")) config.x0 = to_state(*v, run.context("x0"));
    if (auto v = run.get("field")) {
        if (*v == "gaussian") {
            config.field = FieldChoice::gaussian;
        } else if (*v == "constant") {
            config.field = FieldChoice::constant;
        } else {
            fail(run.context("field"), "expected gaussian or constant");
        }
    }
    if (auto v = run.get("constant_velocity")) {
        config.constant_velocity = to_state(*v, run.context("constant_velocity"));
    }
    if (auto v = run.get("edit_delta")) config.edit_delta = to_state(*v, run.context("edit_delta"));
    run.check_consumed();

    SectionReader guidance(parsed.find("guidance"), origin, "guidance");
    if (auto v = guidance.get("eta")) config.guidance.eta = to_double(*v, guidance.context("eta"));
    if (auto v = guidance.get("lambda_mix")) {
        config.guidance.lambda_mix = to_double(*v, guidance.context("lambda_mix"));
    }
    if (auto v = guidance.get("guided_steps")) {
        config.guidance.guided_steps =
            static_cast<int>(to_int(*v, guidance.context("guided_steps")));
    }
    if (auto v = guidance.get("invert_guided_steps")) {
        config.invert_guided_steps =
            static_cast<int>(to_int(*v, guidance.context("invert_guided_steps")));
    }
    if (auto v = guidance.get("targets")) {
        config.guidance.targets = to_state_list(*v, guidance.context("targets"));
    }
    guidance.check_consumed();

    SectionReader endpoints(parsed.find("endpoints"), origin, "endpoints");
    if (parsed.find("endpoints")) {
        auto mu0 = endpoints.get("mu0");
        auto mu1 = endpoints.get("mu1");
        auto sigma0 = endpoints.get("sigma0");
        auto sigma1 = endpoints.get("sigma1");
        endpoints.check_consumed();
        if (!mu0 || !mu1 || !sigma0 || !sigma1) {
            fail(origin + ":endpoints", "needs all of mu0, mu1, sigma0, sigma1");
        }
        StateVector m0 = to_state(*mu0, endpoints.context("mu0"));
        StateVector m1 = to_state(*mu1, endpoints.context("mu1"));
        if (!dim_set) {
            config.dim = m0.dim();
        } else if (m0.dim() != config.dim) {
            fail(endpoints.context("mu0"), "length differs from run.dim");
        }
        config.endpoints = GaussianEndpoints(
            std::move(m0), std::move(m1), to_double_list(*sigma0, endpoints.context("sigma0")),
            to_double_list(*sigma1, endpoints.context("sigma1")));
    }

    SectionReader mask(parsed.find("mask"), origin, "mask");
    if (parsed.find("mask")) {
        auto manifest = mask.get("manifest");
        if (!manifest) fail(origin + ":mask", "needs a manifest path");
        MaskRunConfig mask_config;
        std::filesystem::path manifest_path(*manifest);
        if (manifest_path.is_relative()) {
            manifest_path = path.parent_path() / manifest_path;
        }
        if (!std::filesystem::exists(manifest_path)) {
            fail(mask.context("manifest"), "file not found: " + manifest_path.string());
        }
        mask_config.manifest = manifest_path;
        if (auto v = mask.get("next_manifest")) {
            std::filesystem::path next(*v);
            if (next.is_relative()) next = path.parent_path() / next;
            if (!std::filesystem::exists(next)) {
                fail(mask.context("next_manifest"), "file not found: " + next.string());
            }
            mask_config.next_manifest = next;
        }
        if (auto v = mask.get("window_lo")) {
            mask_config.params.window_lo = static_cast<int>(to_int(*v, mask.context("window_lo")));
        }
        if (auto v = mask.get("window_hi")) {
            mask_config.params.window_hi = static_cast<int>(to_int(*v, mask.context("window_hi")));
        }
        if (auto v = mask.get("tau")) mask_config.params.tau = to_double(*v, mask.context("tau"));
        if (auto v = mask.get("h_factor")) {
            mask_config.params.h_factor = to_double(*v, mask.context("h_factor"));
        }
        if (auto v = mask.get("r_factor")) {
            mask_config.params.r_factor = to_double(*v, mask.context("r_factor"));
        }
        if (auto v = mask.get("rank_on_raw")) {
            mask_config.params.rank_on_raw = to_bool(*v, mask.context("rank_on_raw"));
        }
        if (auto v = mask.get("write_modulated")) {
            mask_config.write_modulated = to_bool(*v, mask.context("write_modulated"));
        }
        mask.check_consumed();
        mask_config.params.validate();
        config.mask = std::move(mask_config);
    }

    for (const auto& [name, section] : parsed.sections) {
        if (name.rfind("profile:", 0) != 0) continue;
        const std::string profile_name = name.substr(8);
        ProfileConfig profile{profile_name,       config.solver,
                              config.steps,       config.guidance,
                              config.invert_guided_steps, config.edit_delta};
        SectionReader reader(&section, origin, name);
        if (auto v = reader.get("solver")) profile.solver = parse_solver_kind(*v);
        if (auto v = reader.get("steps")) {
            profile.steps = static_cast<int>(to_int(*v, reader.context("steps")));
        }
        if (auto v = reader.get("eta")) profile.guidance.eta = to_double(*v, reader.context("eta"));
        if (auto v = reader.get("lambda_mix")) {
            profile.guidance.lambda_mix = to_double(*v, reader.context("lambda_mix"));
        }
        if (auto v = reader.get("guided_steps")) {
            profile.guidance.guided_steps =
                static_cast<int>(to_int(*v, reader.context("guided_steps")));
        }
        if (auto v = reader.get("invert_guided_steps")) {
            profile.invert_guided_steps =
                static_cast<int>(to_int(*v, reader.context("invert_guided_steps")));
        }
        if (auto v = reader.get("edit_delta")) {
            profile.edit_delta = to_state(*v, reader.context("edit_delta"));
        }
        reader.check_consumed();
        config.profiles.push_back(std::move(profile));
    }

    if (!expected_experiment.empty() && !config.experiment.empty() &&
        config.experiment != expected_experiment) {
        fail(origin, "config pins experiment '" + config.experiment + "' but '" +
                         expected_experiment + "' was requested");
    }
    if (config.dim < 1) fail(origin, "dim must be positive");
    if (config.steps < 1) fail(origin, "steps must be positive");
    if (config.rounds < 1) fail(origin, "rounds must be positive");
    if (config.seeds.empty()) fail(origin, "seeds must be nonempty");
    if (config.control_samples < 2) fail(origin, "control_samples must be at least 2");
    for (int n : config.n_list) {
        if (n < 1) fail(origin, "n_list entries must be positive");
    }
    for (double lam : config.lambda_ladder) {
        if (lam <= 0.0) fail(origin, "lambda_ladder entries must be positive");
    }
    for (int n : config.target_counts) {
        if (n < 1) fail(origin, "target_counts entries must be positive");
    }
    config.guidance.validate();
    if (config.x0 && config.x0->dim() != config.dim) {
        fail(origin, "x0 length differs from dim");
    }
    if (config.constant_velocity && config.constant_velocity->dim() != config.dim) {
        fail(origin, "constant_velocity length differs from dim");
    }
    if (config.edit_delta && config.edit_delta->dim() != config.dim) {
        fail(origin, "edit_delta length differs from dim");
    }
    for (const ProfileConfig& profile : config.profiles) {
        profile.guidance.validate();
        if (profile.steps < 1) fail(origin, "profile steps must be positive");
        if (profile.edit_delta && profile.edit_delta->dim() != config.dim) {
            fail(origin, "profile edit_delta length differs from dim");
        }
    }
    return config;
}

GaussianEndpoints RunConfig::endpoints_or_standard() const {
    return endpoints ? *endpoints : GaussianEndpoints::standard(dim);
}

StateVector RunConfig::start_state() const {
    return x0 ? *x0 : StateVector::constant(dim, 1.0);
}

std::vector<ProfileConfig> RunConfig::effective_profiles() const {
    if (!profiles.empty()) return profiles;
    return {ProfileConfig{"default", solver, steps, guidance, invert_guided_steps, edit_delta}};
}

}  // namespace reflow
