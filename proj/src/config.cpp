#include "fmseg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fmseg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
    std::string s = v;
    std::transform(s.begin(), s.end(), s.begin(), ::tolower);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument("config: expected a boolean, got '" + v + "'");
}

int parse_int(const std::string& v) {
    try {
        std::size_t pos = 0;
        int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument("config: expected an integer, got '" + v + "'");
    }
}

double parse_real(const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument("config: expected a number, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& v) {
    try {
        std::size_t pos = 0;
        std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument("config: expected an unsigned integer, got '" + v + "'");
    }
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct KeyBinding {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeyBinding>& bindings() {
    using B = KeyBinding;
    static const std::vector<KeyBinding> table = {
        // model
        B{"model.depth", [](RunConfig& c, const std::string& v) { c.model.depth = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.model.depth); }},
        B{"model.base_channels",
          [](RunConfig& c, const std::string& v) { c.model.base_channels = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.model.base_channels); }},
        B{"model.in_channels",
          [](RunConfig& c, const std::string& v) { c.model.in_channels = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.model.in_channels); }},
        B{"model.max_channels",
          [](RunConfig& c, const std::string& v) { c.model.max_channels = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.model.max_channels); }},
        B{"model.attention_reduction",
          [](RunConfig& c, const std::string& v) { c.model.attention_reduction = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.model.attention_reduction); }},
        B{"model.norm_enabled",
          [](RunConfig& c, const std::string& v) { c.model.norm_enabled = parse_bool(v); },
          [](const RunConfig& c) { return c.model.norm_enabled ? "true" : "false"; }},
        // train
        B{"train.image_size",
          [](RunConfig& c, const std::string& v) { c.train.image_size = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.train.image_size); }},
        B{"train.batch_size",
          [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.train.batch_size); }},
        B{"train.total_epochs",
          [](RunConfig& c, const std::string& v) { c.train.total_epochs = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.train.total_epochs); }},
        B{"train.warm_epochs",
          [](RunConfig& c, const std::string& v) { c.train.warm_epochs = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.train.warm_epochs); }},
        B{"train.decay_epochs",
          [](RunConfig& c, const std::string& v) { c.train.decay_epochs = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.train.decay_epochs); }},
        B{"train.base_lr",
          [](RunConfig& c, const std::string& v) { c.train.base_lr = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.train.base_lr); }},
        B{"train.num_views",
          [](RunConfig& c, const std::string& v) { c.train.num_views = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.train.num_views); }},
        B{"train.alpha", [](RunConfig& c, const std::string& v) { c.train.alpha = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.train.alpha); }},
        B{"train.use_fmaug",
          [](RunConfig& c, const std::string& v) { c.train.use_fmaug = parse_bool(v); },
          [](const RunConfig& c) { return c.train.use_fmaug ? "true" : "false"; }},
        B{"train.use_ssl",
          [](RunConfig& c, const std::string& v) { c.train.use_ssl = parse_bool(v); },
          [](const RunConfig& c) { return c.train.use_ssl ? "true" : "false"; }},
        B{"train.use_att",
          [](RunConfig& c, const std::string& v) { c.train.use_att = parse_bool(v); },
          [](const RunConfig& c) { return c.train.use_att ? "true" : "false"; }},
        B{"train.seed", [](RunConfig& c, const std::string& v) { c.train.seed = parse_u64(v); },
          [](const RunConfig& c) { return std::to_string(c.train.seed); }},
        B{"train.subsample",
          [](RunConfig& c, const std::string& v) {
              int s = parse_int(v);
              if (s <= 0)
                  c.train.subsample.reset();
              else
                  c.train.subsample = s;
          },
          [](const RunConfig& c) { return std::to_string(c.train.subsample.value_or(0)); }},
        // fmaug patch law
        B{"fmaug.patch_count_min",
          [](RunConfig& c, const std::string& v) { c.train.patch_law.count_range[0] = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.train.patch_law.count_range[0]); }},
        B{"fmaug.patch_count_max",
          [](RunConfig& c, const std::string& v) { c.train.patch_law.count_range[1] = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.train.patch_law.count_range[1]); }},
        B{"fmaug.patch_frac_min",
          [](RunConfig& c, const std::string& v) { c.train.patch_law.frac_range[0] = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.train.patch_law.frac_range[0]); }},
        B{"fmaug.patch_frac_max",
          [](RunConfig& c, const std::string& v) { c.train.patch_law.frac_range[1] = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.train.patch_law.frac_range[1]); }},
        // loss
        B{"loss.bce_epsilon",
          [](RunConfig& c, const std::string& v) { c.loss.bce_epsilon = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.loss.bce_epsilon); }},
        // synth
        B{"synth.image_size",
          [](RunConfig& c, const std::string& v) { c.synth.image_size = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.synth.image_size); }},
        B{"synth.count", [](RunConfig& c, const std::string& v) { c.synth.count = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.synth.count); }},
        B{"synth.curves_min",
          [](RunConfig& c, const std::string& v) { c.synth.curves_range[0] = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.synth.curves_range[0]); }},
        B{"synth.curves_max",
          [](RunConfig& c, const std::string& v) { c.synth.curves_range[1] = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.synth.curves_range[1]); }},
        B{"synth.thickness_min",
          [](RunConfig& c, const std::string& v) { c.synth.thickness_range[0] = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.synth.thickness_range[0]); }},
        B{"synth.thickness_max",
          [](RunConfig& c, const std::string& v) { c.synth.thickness_range[1] = parse_int(v); },
          [](const RunConfig& c) { return std::to_string(c.synth.thickness_range[1]); }},
        B{"synth.background_amplitude",
          [](RunConfig& c, const std::string& v) { c.synth.background_amplitude = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.synth.background_amplitude); }},
        B{"synth.noise_amplitude",
          [](RunConfig& c, const std::string& v) { c.synth.noise_amplitude = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.synth.noise_amplitude); }},
        B{"synth.fg_frac_min",
          [](RunConfig& c, const std::string& v) { c.synth.fg_frac_bounds[0] = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.synth.fg_frac_bounds[0]); }},
        B{"synth.fg_frac_max",
          [](RunConfig& c, const std::string& v) { c.synth.fg_frac_bounds[1] = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.synth.fg_frac_bounds[1]); }},
        B{"synth.domains",
          [](RunConfig& c, const std::string& v) {
              int n = parse_int(v);
              if (n < 1) throw std::invalid_argument("config: synth.domains must be >= 1");
              c.synth.domains.clear();
              for (int i = 0; i < n; ++i) c.synth.domains.push_back(default_domain_transform(i));
          },
          [](const RunConfig& c) { return std::to_string(c.synth.domains.size()); }},
        B{"synth.shared_geometry",
          [](RunConfig& c, const std::string& v) { c.synth.shared_geometry = parse_bool(v); },
          [](const RunConfig& c) { return c.synth.shared_geometry ? "true" : "false"; }},
        B{"synth.split_train",
          [](RunConfig& c, const std::string& v) { c.synth.split_fractions[0] = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.synth.split_fractions[0]); }},
        B{"synth.split_val",
          [](RunConfig& c, const std::string& v) { c.synth.split_fractions[1] = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.synth.split_fractions[1]); }},
        B{"synth.split_test",
          [](RunConfig& c, const std::string& v) { c.synth.split_fractions[2] = parse_real(v); },
          [](const RunConfig& c) { return format_real(c.synth.split_fractions[2]); }},
        B{"synth.seed", [](RunConfig& c, const std::string& v) { c.synth.seed = parse_u64(v); },
          [](const RunConfig& c) { return std::to_string(c.synth.seed); }},
    };
    return table;
}

}  // namespace

void RunConfig::apply_preset(const std::string& name) {
    if (name == "desk") {
        train.image_size = 64;
        model.depth = 4;
        model.base_channels = 8;
        train.total_epochs = 60;
        train.warm_epochs = 24;
        train.decay_epochs = 36;
        synth.image_size = 64;
    } else if (name == "paper") {
        train.image_size = 512;
        model.depth = 8;
        model.base_channels = 16;
        train.batch_size = 2;
        train.total_epochs = 200;
        train.warm_epochs = 80;
        train.decay_epochs = 120;
        synth.image_size = 512;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "' (expected desk or paper)");
    }
}

void RunConfig::apply_kv(const std::string& key, const std::string& value) {
    for (const auto& b : bindings()) {
        if (b.key == key) {
            b.set(*this, value);
            return;
        }
    }
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

void RunConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": expected key = value");
        apply_kv(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void RunConfig::finalize() {
    model.image_size = train.image_size;
    model.attention_enabled = train.use_att;
    loss.alpha = train.alpha;
    train.bce_epsilon = loss.bce_epsilon;
    model.validate();
    train.validate();
    loss.validate();
    synth.validate();
}

std::string RunConfig::resolved_text() const {
    std::ostringstream out;
    for (const auto& b : bindings()) out << b.key << " = " << b.get(*this) << "\n";
    // derived fields, informational
    out << "# model.image_size = " << model.image_size << " (follows train.image_size)\n";
    out << "# model.attention_enabled = " << (model.attention_enabled ? "true" : "false")
        << " (follows train.use_att)\n";
    return out.str();
}

void RunConfig::write_resolved(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write resolved config: " + path);
    out << resolved_text();
}

}  // namespace fmseg
