#include "diffcd/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace diffcd::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
    T v{};
    const std::string s = trim(text);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        throw InputError("config key '" + key + "': cannot parse '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& text, const std::string& key) {
    const std::string s = trim(text);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw InputError("config key '" + key + "': expected true/false, got '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!trim(tok).empty()) out.push_back(parse_number<T>(tok, key));
    }
    return out;
}

std::string fmt(double v) { return format_double(v); }

template <typename T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) out += fmt(v[i]);
        else out += std::to_string(v[i]);
    }
    return out;
}

std::string join_vector(const Vector& v) {
    return join(std::vector<double>(v.data(), v.data() + v.size()));
}

struct Key {
    std::string section;
    std::string name;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <typename T, typename Access>
Key number_key(std::string section, std::string name, Access access) {
    return {std::move(section), std::move(name),
            [access](const RunConfig& c) {
                const T v = access(const_cast<RunConfig&>(c));
                if constexpr (std::is_floating_point_v<T>) return fmt(v);
                else return std::to_string(v);
            },
            [access](RunConfig& c, const std::string& v, const std::string& k) { access(c) = parse_number<T>(v, k); }};
}

const std::vector<Key>& key_table() {
    static const std::vector<Key> keys = [] {
        std::vector<Key> k;
        // [field]
        k.push_back(number_key<int>("field", "input_dim", [](RunConfig& c) -> int& { return c.train.field.input_dim; }));
        k.push_back(number_key<int>("field", "hidden_layers", [](RunConfig& c) -> int& { return c.train.field.hidden_layers; }));
        k.push_back(number_key<int>("field", "hidden_width", [](RunConfig& c) -> int& { return c.train.field.hidden_width; }));
        k.push_back({"field", "skip_layers", [](const RunConfig& c) { return join(c.train.field.skip_layers); },
                     [](RunConfig& c, const std::string& v, const std::string& key) {
                         c.train.field.skip_layers = parse_list<int>(v, key);
                     }});
        k.push_back(number_key<double>("field", "activation_sharpness",
                                       [](RunConfig& c) -> double& { return c.train.field.activation_sharpness; }));
        k.push_back(number_key<double>("field", "init_radius", [](RunConfig& c) -> double& { return c.train.field.init_radius; }));
        k.push_back({"field", "precision",
                     [](const RunConfig& c) { return std::to_string(precision_bits(c.train.field.precision)); },
                     [](RunConfig& c, const std::string& v, const std::string& key) {
                         c.train.field.precision = precision_from_bits(parse_number<int>(v, key));
                     }});
        // [sampling]
        auto S = [](RunConfig& c) -> SamplingConfig& { return c.train.loss.sampling; };
        k.push_back(number_key<int>("sampling", "K_mesh", [S](RunConfig& c) -> int& { return S(c).K_mesh; }));
        k.push_back(number_key<std::size_t>("sampling", "bank_size", [S](RunConfig& c) -> std::size_t& { return S(c).bank_size; }));
        k.push_back(number_key<int>("sampling", "descent_steps", [S](RunConfig& c) -> int& { return S(c).descent_steps; }));
        k.push_back(number_key<double>("sampling", "accept_tol", [S](RunConfig& c) -> double& { return S(c).accept_tol; }));
        k.push_back(number_key<int>("sampling", "train_mc_resolution",
                                    [S](RunConfig& c) -> int& { return S(c).train_mc_resolution; }));
        k.push_back(number_key<int>("sampling", "local_knn_k", [S](RunConfig& c) -> int& { return S(c).local_knn_k; }));
        k.push_back(number_key<double>("sampling", "local_std_scale",
                                       [S](RunConfig& c) -> double& { return S(c).local_std_scale; }));
        k.push_back(number_key<std::size_t>("sampling", "n_global", [S](RunConfig& c) -> std::size_t& { return S(c).n_global; }));
        k.push_back(number_key<std::size_t>("sampling", "batch_surface",
                                            [S](RunConfig& c) -> std::size_t& { return S(c).batch_surface; }));
        k.push_back(number_key<std::size_t>("sampling", "batch_cloud",
                                            [S](RunConfig& c) -> std::size_t& { return S(c).batch_cloud; }));
        k.push_back(number_key<std::size_t>("sampling", "ssa_samples",
                                            [S](RunConfig& c) -> std::size_t& { return S(c).ssa_samples; }));
        // [loss]
        k.push_back({"loss", "variant", [](const RunConfig& c) { return to_string(c.train.loss.variant); },
                     [](RunConfig& c, const std::string& v, const std::string&) {
                         c.train.loss.variant = parse_loss_variant(trim(v));
                     }});
        k.push_back(number_key<double>("loss", "lambda", [](RunConfig& c) -> double& { return c.train.loss.eikonal_weight; }));
        k.push_back(number_key<double>("loss", "mu", [](RunConfig& c) -> double& { return c.train.loss.ssa_weight; }));
        k.push_back(number_key<double>("loss", "alpha", [](RunConfig& c) -> double& { return c.train.loss.ssa_sharpness; }));
        auto domain_key = [](std::string name, bool lower) {
            return Key{"loss", std::move(name),
                       [lower](const RunConfig& c) {
                           if (c.domain_auto) return std::string("auto");
                           return join_vector(lower ? c.train.loss.domain.lower : c.train.loss.domain.upper);
                       },
                       [lower](RunConfig& c, const std::string& v, const std::string& key) {
                           if (trim(v) == "auto") {
                               c.domain_auto = true;
                               return;
                           }
                           const auto vals = parse_list<double>(v, key);
                           Vector corner = Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
                           if (c.domain_auto) {
                               c.train.loss.domain = BoundingBox::unit(static_cast<int>(vals.size()));
                               c.domain_auto = false;
                           }
                           (lower ? c.train.loss.domain.lower : c.train.loss.domain.upper) = corner;
                       }};
        };
        k.push_back(domain_key("domain_lower", true));
        k.push_back(domain_key("domain_upper", false));
        // [train]
        k.push_back(number_key<long>("train", "iterations", [](RunConfig& c) -> long& { return c.train.iterations; }));
        k.push_back(number_key<double>("train", "lr", [](RunConfig& c) -> double& { return c.train.base_lr; }));
        k.push_back(number_key<long>("train", "warmup", [](RunConfig& c) -> long& { return c.train.warmup_iters; }));
        k.push_back(number_key<double>("train", "beta1", [](RunConfig& c) -> double& { return c.train.beta1; }));
        k.push_back(number_key<double>("train", "beta2", [](RunConfig& c) -> double& { return c.train.beta2; }));
        k.push_back(number_key<double>("train", "adam_eps", [](RunConfig& c) -> double& { return c.train.adam_eps; }));
        k.push_back(number_key<std::uint64_t>("train", "seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; }));
        k.push_back(number_key<long>("train", "log_every", [](RunConfig& c) -> long& { return c.train.log_every; }));
        k.push_back(number_key<long>("train", "checkpoint_every",
                                     [](RunConfig& c) -> long& { return c.train.checkpoint_every; }));
        // [io]
        k.push_back({"io", "input", [](const RunConfig& c) { return c.io.input; },
                     [](RunConfig& c, const std::string& v, const std::string&) { c.io.input = trim(v); }});
        k.push_back({"io", "out_dir", [](const RunConfig& c) { return c.io.out_dir; },
                     [](RunConfig& c, const std::string& v, const std::string&) { c.io.out_dir = trim(v); }});
        k.push_back({"io", "normalize", [](const RunConfig& c) { return std::string(c.io.normalize ? "true" : "false"); },
                     [](RunConfig& c, const std::string& v, const std::string& key) { c.io.normalize = parse_bool(v, key); }});
        k.push_back(number_key<int>("io", "extract_resolution", [](RunConfig& c) -> int& { return c.io.extract_resolution; }));
        k.push_back(number_key<std::size_t>("io", "metric_samples",
                                            [](RunConfig& c) -> std::size_t& { return c.io.metric_samples; }));
        return k;
    }();
    return keys;
}

const Key& find_key(const std::string& section, const std::string& name) {
    for (const auto& k : key_table()) {
        if (k.section == section && k.name == name) return k;
    }
    throw InputError("unknown config key '" + section + "." + name + "'");
}

}  // namespace

void RunConfig::resolve() {
    if (domain_auto) train.loss.domain = BoundingBox::unit(train.field.input_dim);
    train.validate();
    if (io.extract_resolution < 2) throw InputError("io.extract_resolution must be >= 2");
    if (io.metric_samples < 1) throw InputError("io.metric_samples must be >= 1");
}

RunConfig default_config() {
    RunConfig c;
    c.resolve();
    return c;
}

RunConfig desk_config_3d() {
    RunConfig c;
    auto& f = c.train.field;
    f.hidden_layers = 4;
    f.hidden_width = 64;
    f.skip_layers = {2};
    auto& s = c.train.loss.sampling;
    s.bank_size = 20000;
    s.batch_cloud = 1000;
    s.batch_surface = 1000;
    s.n_global = 125;
    s.ssa_samples = 1000;
    c.train.iterations = 5000;
    c.train.warmup_iters = 200;
    c.io.extract_resolution = 128;
    c.resolve();
    return c;
}

RunConfig desk_config_2d() {
    RunConfig c;
    auto& f = c.train.field;
    f.input_dim = 2;
    f.hidden_layers = 4;
    f.hidden_width = 64;
    f.skip_layers = {2};
    auto& s = c.train.loss.sampling;
    s.bank_size = 20000;
    s.batch_cloud = 500;
    s.batch_surface = 500;
    s.n_global = 250;
    s.ssa_samples = 1000;
    c.train.iterations = 3000;
    c.train.warmup_iters = 100;
    c.io.normalize = false;
    c.io.extract_resolution = 256;
    c.io.metric_samples = 2000;
    c.resolve();
    return c;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.section + "." + k.name);
    return out;
}

std::string serialize(const RunConfig& cfg) {
    std::ostringstream out;
    std::string section;
    for (const auto& k : key_table()) {
        if (k.section != section) {
            if (!section.empty()) out << '\n';
            section = k.section;
            out << '[' << section << "]\n";
        }
        out << k.name << " = " << k.get(cfg) << '\n';
    }
    return out.str();
}

void apply_ini(RunConfig& base, std::istream& in, const std::string& source) {
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.resize(comment);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw InputError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            bool known = false;
            for (const auto& k : key_table()) known = known || k.section == section;
            if (!known) throw InputError(where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(where + ": expected key = value");
        if (section.empty()) throw InputError(where + ": key outside of a section");
        const std::string name = trim(line.substr(0, eq));
        try {
            const Key& key = find_key(section, name);
            key.set(base, line.substr(eq + 1), section + "." + name);
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
    }
}

void apply_ini_file(RunConfig& base, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path.string());
    apply_ini(base, in, path.string());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw InputError("override '" + assignment + "' is not of the form section.key=value");
    }
    const std::string section = trim(assignment.substr(0, dot));
    const std::string name = trim(assignment.substr(dot + 1, eq - dot - 1));
    find_key(section, name).set(cfg, assignment.substr(eq + 1), section + "." + name);
}

bool same_config(const RunConfig& a, const RunConfig& b) { return serialize(a) == serialize(b); }

}  // namespace diffcd::cli
