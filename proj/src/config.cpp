#include "guidelab/config.hpp"

#include <fmt/format.h>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "guidelab/presets.hpp"

namespace guidelab {

namespace pt = boost::property_tree;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

double parse_number(const std::string& raw, const std::string& key) {
    const std::string s = boost::trim_copy(raw);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) config_error("trailing characters in number for '" + key + "': '" + raw + "'");
        return v;
    } catch (const std::logic_error&) {
        config_error("expected a number for '" + key + "', got '" + raw + "'");
    }
}

std::vector<double> parse_list(const std::string& raw, const std::string& key) {
    std::vector<std::string> parts;
    const std::string s = boost::trim_copy(raw);
    if (s.empty()) return {};
    boost::split(parts, s, boost::is_any_of(","));
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(parse_number(p, key));
    return out;
}

std::vector<Vec> parse_points(const std::string& raw, const std::string& key) {
    std::vector<std::string> parts;
    boost::split(parts, raw, boost::is_any_of("|"));
    std::vector<Vec> out;
    for (const auto& p : parts) out.push_back(parse_list(p, key));
    return out;
}

bool parse_bool(const std::string& raw, const std::string& key) {
    const std::string s = boost::to_lower_copy(boost::trim_copy(raw));
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    config_error("expected a boolean for '" + key + "', got '" + raw + "'");
}

// Drops a trailing "; ..." or "# ..." comment (the marker must follow whitespace).
std::string strip_comment(const std::string& raw) {
    std::size_t cut = raw.size();
    for (std::size_t i = 1; i < raw.size(); ++i)
        if ((raw[i] == ';' || raw[i] == '#') && std::isspace(static_cast<unsigned char>(raw[i - 1]))) {
            cut = i;
            break;
        }
    return boost::trim_copy(raw.substr(0, cut));
}

// Reads keys of one section and reports any it did not consume.
class Section {
public:
    Section(const pt::ptree& root, std::string name) : name_(std::move(name)) {
        if (auto child = root.get_child_optional(pt::ptree::path_type(name_, '/'))) tree_ = &*child;
    }
    ~Section() noexcept(false) {
        if (!tree_ || std::uncaught_exceptions() > 0) return;
        for (const auto& kv : *tree_)
            if (!used_.count(kv.first)) config_error("unknown key '" + kv.first + "' in [" + name_ + "]");
    }
    bool present() const { return tree_ != nullptr; }
    bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

    std::string text(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        if (!has(key)) return fallback;
        return strip_comment(tree_->find(key)->second.data());
    }
    std::string text(const std::string& key) {
        if (!has(key)) config_error("missing key '" + key + "' in [" + name_ + "]");
        return text(key, "");
    }
    double number(const std::string& key, double fallback) {
        return has(key) ? parse_number(text(key), qualified(key)) : (used_.insert(key), fallback);
    }
    std::vector<double> list(const std::string& key) { return parse_list(text(key), qualified(key)); }
    std::vector<Vec> points(const std::string& key) { return parse_points(text(key), qualified(key)); }
    bool flag(const std::string& key, bool fallback) {
        return has(key) ? parse_bool(text(key), qualified(key)) : (used_.insert(key), fallback);
    }
    std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const std::string s = text(key);
        try {
            std::size_t used = 0;
            const auto v = std::stoull(s, &used);
            if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
            return v;
        } catch (const std::logic_error&) {
            config_error("expected a non-negative integer for '" + qualified(key) + "', got '" + s + "'");
        }
    }
    int integer(const std::string& key, int fallback) {
        const double v = number(key, fallback);
        if (v != std::floor(v) || std::abs(v) > 1e9) config_error("expected an integer for '" + qualified(key) + "'");
        return static_cast<int>(v);
    }

private:
    std::string qualified(const std::string& key) const { return name_ + "." + key; }

    std::string name_;
    const pt::ptree* tree_ = nullptr;
    std::set<std::string> used_;
};

MixtureSpec read_mixture(Section& sec) {
    MixtureSpec m;
    m.weights = sec.list("weights");
    m.means = sec.points("means");
    if (sec.has("variances"))
        m.variances = sec.list("variances");
    else
        m.variances.assign(m.weights.size(), sec.number("variance", 1.0));
    return m;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
}

std::string join_points(const std::vector<Vec>& pts) {
    std::string out;
    for (std::size_t i = 0; i < pts.size(); ++i) out += (i ? " | " : "") + join(pts[i]);
    return out;
}

void write_mixture(std::ostringstream& os, const MixtureSpec& m) {
    os << "weights = " << join(m.weights) << "\n";
    os << "means = " << join_points(m.means) << "\n";
    os << "variances = " << join(m.variances) << "\n";
}

}  // namespace

std::string format_double(double v) { return fmt::format("{}", v); }

IsotropicGmm MixtureSpec::build() const {
    if (weights.empty()) config_error("mixture needs at least one component");
    if (means.size() != weights.size() || variances.size() != weights.size())
        config_error("mixture weights, means and variances must have equal length");
    try {
        return IsotropicGmm::from_weights(weights, means, variances);
    } catch (const Error& e) {
        config_error(std::string("invalid mixture: ") + e.what());
    }
}

RewardSpec RewardConfig::build() const {
    if (type == "quadratic-well") return RewardSpec{QuadraticWell{target, beta}};
    if (type == "band") return RewardSpec{IndicatorBand{axis, lo, hi, height, beta}};
    config_error("reward type '" + type + "' does not define a reward function");
}

void ExperimentConfig::validate() const {
    if (name.empty()) config_error("experiment name must not be empty");
    if (w_grid.empty()) config_error("w_grid must not be empty");
    for (double w : w_grid)
        if (!(w >= 0.0) || !std::isfinite(w)) config_error("every w must be finite and >= 0");
    if (trials < 1) config_error("trials must be >= 1");
    if (steps < 2) config_error("steps must be >= 2");
    if (workers < 0) config_error("workers must be >= 0");

    const bool classifier_mode = mode == GuidanceMode::Cfg || mode == GuidanceMode::ClassifierGuidance;
    if (mode == GuidanceMode::None || mode == GuidanceMode::Conditional)
        config_error("experiments need a guided mode (cfg, classifier-guidance, reward-improve, cost-reduce)");
    if (classifier_mode && !model.is_class_pair()) config_error("mode " + std::string(to_string(mode)) + " needs a class pair model");
    if (mode == GuidanceMode::RewardImprove) {
        if (model.is_class_pair()) config_error("reward-improve needs a gmm or swissroll model");
        if (reward.type == "none") config_error("reward-improve needs a [reward] section");
    }
    if (mode == GuidanceMode::CostReduce && !model.is_class_pair())
        config_error("cost-reduce is supported for class pairs (cost 1 / p(c | x))");

    if (model.type == "gmm") {
        model.mixture.build();
    } else if (model.type == "class-pair") {
        if (!(model.prior > 0.0 && model.prior < 1.0)) config_error("prior must lie in (0, 1)");
        try {
            ClassPair(model.unconditional.build(), model.conditional.build(), model.prior);
        } catch (const Error& e) {
            config_error(std::string("invalid class pair: ") + e.what());
        }
    } else if (model.type == "swissroll") {
        if (model.points < 10) config_error("swissroll needs at least 10 points");
    } else if (model.type != "two-class-mixture") {
        config_error("unknown model type '" + model.type + "'");
    }

    if (mode == GuidanceMode::RewardImprove) {
        const int d = model.type == "swissroll" ? 2 : model.mixture.build().dim();
        try {
            reward.build().validate(d);
        } catch (const Error& e) {
            config_error(std::string("invalid reward: ") + e.what());
        }
        if (model.type == "gmm" && reward.type != "quadratic-well")
            config_error("gmm models support the quadratic-well reward only");
    }
    if (metrics.has_window && !(metrics.window_lo <= metrics.window_hi)) config_error("window needs lo <= hi");
    if (metrics.tv_bins < 1 || !(metrics.tv_hi > metrics.tv_lo)) config_error("invalid tv grid");
    if (!(metrics.classifier_level > 0.0 && metrics.classifier_level <= 1.0))
        config_error("classifier_level must lie in (0, 1]");
}

ExperimentConfig parse_config(const std::string& text) {
    pt::ptree root;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, root);
    } catch (const pt::ini_parser_error& e) {
        config_error(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    static const std::set<std::string> known = {"experiment", "model", "unconditional", "conditional",
                                                "reward", "guidance", "schedule", "run", "metrics"};
    for (const auto& kv : root) {
        if (!known.count(kv.first)) config_error("unknown section [" + kv.first + "]");
        if (kv.second.empty() && !kv.second.data().empty())
            config_error("key '" + kv.first + "' outside of any section");
    }

    ExperimentConfig c;
    {
        Section s(root, "experiment");
        c.name = s.text("name");
    }
    {
        Section s(root, "model");
        c.model.type = s.text("type");
        if (c.model.type == "gmm") c.model.mixture = read_mixture(s);
        if (c.model.type == "class-pair") c.model.prior = s.number("prior", 0.5);
        if (c.model.type == "swissroll") {
            c.model.points = s.integer("points", 1000);
            c.model.cloud_seed = s.unsigned_int("seed", 2024);
        }
    }
    if (c.model.type == "class-pair") {
        Section u(root, "unconditional");
        c.model.unconditional = read_mixture(u);
        Section k(root, "conditional");
        c.model.conditional = read_mixture(k);
    }
    {
        Section s(root, "reward");
        if (s.present()) {
            c.reward.type = s.text("type");
            if (c.reward.type == "quadratic-well") {
                c.reward.target = s.list("target");
                c.reward.beta = s.number("beta", 1.0);
            } else if (c.reward.type == "band") {
                c.reward.axis = s.integer("axis", 0);
                c.reward.lo = s.number("lo", 0.0);
                c.reward.hi = s.number("hi", 1.0);
                c.reward.height = s.number("height", 1.0);
                c.reward.beta = s.number("beta", 1.0);
            } else if (c.reward.type != "none") {
                config_error("unknown reward type '" + c.reward.type + "'");
            }
        }
    }
    {
        Section s(root, "guidance");
        c.mode = parse_guidance_mode(s.text("mode"));
        c.w_grid = s.list("w_grid");
    }
    {
        Section s(root, "schedule");
        c.steps = s.integer("steps", 4000);
        c.c0 = s.number("c0", 1.0);
        c.c1 = s.number("c1", 2.0);
    }
    {
        Section s(root, "run");
        c.trials = s.unsigned_int("trials", 10000);
        c.master_seed = s.unsigned_int("seed", 1);
        c.output = s.text("output", "");
        c.record_trajectories = s.flag("record_trajectories", false);
        c.decouple_noise = s.flag("decouple_noise", false);
        c.workers = s.integer("workers", 0);
    }
    {
        Section s(root, "metrics");
        if (s.has("window")) {
            const auto w = s.list("window");
            if (w.size() != 2) config_error("metrics.window needs two values: lo, hi");
            c.metrics.has_window = true;
            c.metrics.window_lo = w[0];
            c.metrics.window_hi = w[1];
        }
        c.metrics.window_axis = s.integer("window_axis", 0);
        c.metrics.tv_bins = s.integer("tv_bins", 200);
        if (s.has("tv_range")) {
            const auto r = s.list("tv_range");
            if (r.size() != 2) config_error("metrics.tv_range needs two values: lo, hi");
            c.metrics.tv_lo = r[0];
            c.metrics.tv_hi = r[1];
        }
        c.metrics.classifier_level = s.number("classifier_level", 1.0);
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string snapshot(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[experiment]\nname = " << c.name << "\n\n[model]\ntype = " << c.model.type << "\n";
    if (c.model.type == "gmm") write_mixture(os, c.model.mixture);
    if (c.model.type == "class-pair") {
        os << "prior = " << format_double(c.model.prior) << "\n\n[unconditional]\n";
        write_mixture(os, c.model.unconditional);
        os << "\n[conditional]\n";
        write_mixture(os, c.model.conditional);
    }
    if (c.model.type == "swissroll") os << "points = " << c.model.points << "\nseed = " << c.model.cloud_seed << "\n";
    if (c.reward.type != "none") {
        os << "\n[reward]\ntype = " << c.reward.type << "\n";
        if (c.reward.type == "quadratic-well") os << "target = " << join(c.reward.target) << "\n";
        if (c.reward.type == "band")
            os << "axis = " << c.reward.axis << "\nlo = " << format_double(c.reward.lo)
               << "\nhi = " << format_double(c.reward.hi) << "\nheight = " << format_double(c.reward.height) << "\n";
        os << "beta = " << format_double(c.reward.beta) << "\n";
    }
    os << "\n[guidance]\nmode = " << to_string(c.mode) << "\nw_grid = " << join(c.w_grid) << "\n";
    os << "\n[schedule]\nsteps = " << c.steps << "\nc0 = " << format_double(c.c0) << "\nc1 = " << format_double(c.c1)
       << "\n";
    os << "\n[run]\ntrials = " << c.trials << "\nseed = " << c.master_seed << "\n";
    os << "record_trajectories = " << (c.record_trajectories ? "true" : "false")
       << "\ndecouple_noise = " << (c.decouple_noise ? "true" : "false") << "\n";
    os << "\n[metrics]\n";
    if (c.metrics.has_window)
        os << "window = " << format_double(c.metrics.window_lo) << ", " << format_double(c.metrics.window_hi)
           << "\nwindow_axis = " << c.metrics.window_axis << "\n";
    os << "tv_bins = " << c.metrics.tv_bins << "\ntv_range = " << format_double(c.metrics.tv_lo) << ", "
       << format_double(c.metrics.tv_hi) << "\nclassifier_level = " << format_double(c.metrics.classifier_level)
       << "\n";
    return os.str();
}

}  // namespace guidelab
