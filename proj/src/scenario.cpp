#include "mpcguard/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <vector>

namespace mpcguard {

ScenarioError::ScenarioError(const std::string& message, std::optional<int> line)
    : std::runtime_error(message), line_(line) {}

namespace {

constexpr TimeIndex kOpenEnd = std::numeric_limits<TimeIndex>::max();

std::optional<int> line_of(const YAML::Node& node) {
    if (!node.IsDefined()) return std::nullopt;
    const YAML::Mark mark = node.Mark();
    if (mark.is_null() || mark.line < 0) return std::nullopt;
    return mark.line + 1;
}

bool is_index(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// Copies a node without its source marks so override values never report a
// line from the override string.
YAML::Node unmarked(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Scalar: return YAML::Node(node.Scalar());
        case YAML::NodeType::Sequence: {
            YAML::Node out(YAML::NodeType::Sequence);
            for (const auto& item : node) out.push_back(unmarked(item));
            return out;
        }
        case YAML::NodeType::Map: {
            YAML::Node out(YAML::NodeType::Map);
            for (const auto& kv : node) out[kv.first.Scalar()] = unmarked(kv.second);
            return out;
        }
        default: return YAML::Node(YAML::NodeType::Null);
    }
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    return parts;
}

class Reader {
public:
    Reader(std::string source, YAML::Node root) : source_(std::move(source)), root_(std::move(root)) {}

    [[noreturn]] void fail(const std::string& message, const YAML::Node& at) const {
        throw error(message, line_of(at));
    }

    ScenarioError error(const std::string& message, std::optional<int> line) const {
        std::string where = source_;
        if (line) where += ":" + std::to_string(*line);
        return ScenarioError(where + ": " + message, line);
    }

    void apply(const Override& o) {
        const auto parts = split_path(o.path);
        if (parts.empty() || std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p.empty(); })) {
            throw error("malformed override path '" + o.path + "'", std::nullopt);
        }
        YAML::Node value;
        try {
            value = unmarked(YAML::Load(o.value));
        } catch (const YAML::Exception& e) {
            throw error("override " + o.path + ": cannot parse value '" + o.value + "': " + e.msg, std::nullopt);
        }
        if (!root_.IsMap()) {
            if (root_.IsNull() || !root_.IsDefined()) {
                root_ = YAML::Node(YAML::NodeType::Map);
            } else {
                throw error("scenario document must be a mapping", line_of(root_));
            }
        }
        YAML::Node cur;
        cur.reset(root_);
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            YAML::Node next;
            if (cur.IsSequence()) {
                if (!is_index(parts[i])) throw error("override " + o.path + ": '" + parts[i] + "' is not a list index", std::nullopt);
                const auto idx = std::stoul(parts[i]);
                if (idx >= cur.size()) throw error("override " + o.path + ": index " + parts[i] + " out of range", std::nullopt);
                next.reset(cur[idx]);
            } else {
                if (!cur.IsMap()) cur = YAML::Node(YAML::NodeType::Map);
                if (!cur[parts[i]].IsDefined() || cur[parts[i]].IsNull()) cur[parts[i]] = YAML::Node(YAML::NodeType::Map);
                next.reset(cur[parts[i]]);
            }
            cur.reset(next);
        }
        const std::string& leaf = parts.back();
        if (cur.IsSequence()) {
            if (!is_index(leaf)) throw error("override " + o.path + ": '" + leaf + "' is not a list index", std::nullopt);
            const auto idx = std::stoul(leaf);
            if (idx > cur.size()) throw error("override " + o.path + ": index " + leaf + " out of range", std::nullopt);
            if (idx == cur.size()) {
                cur.push_back(value);
            } else {
                cur[idx] = value;
            }
        } else {
            cur[leaf] = value;
        }
    }

    const YAML::Node& root() const { return root_; }

    void check_keys(const YAML::Node& node, const std::string& section,
                    std::initializer_list<std::string_view> allowed) const {
        if (!node.IsMap()) fail(section + " must be a mapping", node);
        for (const auto& kv : node) {
            const std::string key = kv.first.Scalar();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                const std::string full = section.empty() ? key : section + "." + key;
                fail("unknown key '" + full + "'", kv.first);
            }
        }
    }

    template <typename T>
    void scalar(const YAML::Node& parent, const char* key, const std::string& path, T& out) const {
        const YAML::Node node = parent[key];
        if (!node.IsDefined() || node.IsNull()) return;
        if (!node.IsScalar()) fail(path + ": expected a " + kind<T>(), node);
        try {
            out = node.as<T>();
        } catch (const YAML::BadConversion&) {
            fail(path + ": expected a " + kind<T>() + ", got '" + node.Scalar() + "'", node);
        }
    }

    void vector(const YAML::Node& parent, const char* key, const std::string& path, Vector& out,
                Eigen::Index size) const {
        const YAML::Node node = parent[key];
        if (!node.IsDefined() || node.IsNull()) return;
        out = numbers(node, path);
        if (out.size() != size) {
            fail(path + ": expected " + std::to_string(size) + " entries, got " + std::to_string(out.size()), node);
        }
    }

    Vector numbers(const YAML::Node& node, const std::string& path) const {
        if (!node.IsSequence()) fail(path + ": expected a list of numbers", node);
        Vector v(static_cast<Eigen::Index>(node.size()));
        for (std::size_t i = 0; i < node.size(); ++i) {
            try {
                v[static_cast<Eigen::Index>(i)] = node[i].as<double>();
            } catch (const YAML::BadConversion&) {
                fail(path + "[" + std::to_string(i) + "]: expected a number", node[i]);
            }
        }
        return v;
    }

    template <typename Fn>
    auto named(const YAML::Node& parent, const char* key, const std::string& path, Fn&& from_string) const
        -> std::optional<decltype(from_string(std::string_view{}))> {
        const YAML::Node node = parent[key];
        if (!node.IsDefined() || node.IsNull()) return std::nullopt;
        if (!node.IsScalar()) fail(path + ": expected a name", node);
        try {
            return from_string(node.Scalar());
        } catch (const std::invalid_argument& e) {
            fail(path + ": " + e.what(), node);
        }
    }

    // Best-effort position for a validation message that starts with a key path.
    std::optional<int> locate(const std::string& message) const {
        const std::string segment_tag = "attack segment ";
        if (message.rfind(segment_tag, 0) == 0) {
            const std::size_t begin = segment_tag.size();
            std::size_t end = begin;
            while (end < message.size() && std::isdigit(static_cast<unsigned char>(message[end]))) ++end;
            const YAML::Node segments = lookup({"attack", "segments"});
            if (end > begin && segments.IsSequence()) {
                const auto idx = std::stoul(message.substr(begin, end - begin));
                if (idx < segments.size()) return line_of(segments[idx]);
            }
            return line_of(segments);
        }
        if (message.find("single-channel attack assumption") != std::string::npos) {
            return line_of(lookup({"attack", "segments"}));
        }
        const std::string head = message.substr(0, message.find(' '));
        if (head.find('.') == std::string::npos) return std::nullopt;
        const auto parts = split_path(head);
        for (std::size_t n = parts.size(); n > 0; --n) {
            const YAML::Node node = lookup(std::vector<std::string>(parts.begin(), parts.begin() + n));
            if (node.IsDefined() && !node.IsNull()) return line_of(node);
        }
        return std::nullopt;
    }

private:
    template <typename T>
    static std::string kind() {
        if constexpr (std::is_same_v<T, bool>) return "boolean";
        else if constexpr (std::is_integral_v<T>) return "whole number";
        else if constexpr (std::is_floating_point_v<T>) return "number";
        else return "string";
    }

    YAML::Node lookup(const std::vector<std::string>& parts) const {
        YAML::Node cur;
        cur.reset(root_);
        for (const auto& p : parts) {
            if (!cur.IsMap()) return YAML::Node();
            const YAML::Node next = cur[p];
            if (!next.IsDefined()) return YAML::Node();
            cur.reset(next);
        }
        return cur;
    }

    std::string source_;
    YAML::Node root_;
};

NoiseModel::Kind noise_kind_from_string(std::string_view name) {
    if (name == "none") return NoiseModel::Kind::none;
    if (name == "gaussian") return NoiseModel::Kind::gaussian;
    throw std::invalid_argument("unknown noise kind '" + std::string(name) + "' (expected none or gaussian)");
}

void read_plant(const Reader& r, const YAML::Node& node, TankParams& plant) {
    r.check_keys(node, "plant", {"alpha1", "alpha2", "sample_time"});
    r.scalar(node, "alpha1", "plant.alpha1", plant.alpha1);
    r.scalar(node, "alpha2", "plant.alpha2", plant.alpha2);
    r.scalar(node, "sample_time", "plant.sample_time", plant.sample_time);
}

void read_mpc(const Reader& r, const YAML::Node& node, TankMpcSettings& mpc) {
    r.check_keys(node, "mpc", {"horizon", "q_diag", "r_diag", "terminal_radius", "setpoint", "proximity_radius",
                               "proximity_norm", "proximity_enabled"});
    r.scalar(node, "horizon", "mpc.horizon", mpc.horizon);
    r.vector(node, "q_diag", "mpc.q_diag", mpc.q_diag, 2);
    r.vector(node, "r_diag", "mpc.r_diag", mpc.r_diag, 1);
    r.scalar(node, "terminal_radius", "mpc.terminal_radius", mpc.terminal_radius);
    const YAML::Node sp = node["setpoint"];
    if (sp.IsDefined() && sp.IsScalar()) {
        // A single level: at equilibrium both tanks share it.
        double level = 0.0;
        r.scalar(node, "setpoint", "mpc.setpoint", level);
        mpc.setpoint = State::Constant(2, level);
    } else {
        r.vector(node, "setpoint", "mpc.setpoint", mpc.setpoint, 2);
    }
    r.scalar(node, "proximity_radius", "mpc.proximity_radius", mpc.proximity_radius);
    if (auto n = r.named(node, "proximity_norm", "mpc.proximity_norm", norm_from_string)) mpc.proximity_norm = *n;
    r.scalar(node, "proximity_enabled", "mpc.proximity_enabled", mpc.proximity_enabled);
}

void read_detector(const Reader& r, const YAML::Node& node, DetectorSettings& det) {
    r.check_keys(node, "detector", {"enabled", "delta", "gamma", "norm"});
    r.scalar(node, "enabled", "detector.enabled", det.enabled);
    r.scalar(node, "delta", "detector.delta", det.delta);
    r.scalar(node, "gamma", "detector.gamma", det.gamma);
    if (auto n = r.named(node, "norm", "detector.norm", norm_from_string)) det.norm = *n;
}

void read_noise(const Reader& r, const YAML::Node& node, NoiseModel& noise) {
    r.check_keys(node, "noise", {"kind", "std_dev", "seed"});
    if (auto k = r.named(node, "kind", "noise.kind", noise_kind_from_string)) noise.kind = *k;
    r.scalar(node, "std_dev", "noise.std_dev", noise.std_dev);
    r.scalar(node, "seed", "noise.seed", noise.seed);
}

void read_attack(const Reader& r, const YAML::Node& node, AttackSchedule& attack) {
    r.check_keys(node, "attack", {"segments"});
    const YAML::Node segments = node["segments"];
    if (!segments.IsDefined() || segments.IsNull()) return;
    if (!segments.IsSequence()) r.fail("attack.segments must be a list", segments);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const YAML::Node seg = segments[i];
        const std::string path = "attack.segments[" + std::to_string(i) + "]";
        r.check_keys(seg, path, {"channel", "index", "start", "end", "shape", "magnitude", "values"});
        AttackSegment s;
        s.end_step = kOpenEnd;
        if (auto c = r.named(seg, "channel", path + ".channel", channel_from_string)) s.channel = *c;
        r.scalar(seg, "index", path + ".index", s.target_index);
        if (!seg["start"].IsDefined()) r.fail(path + ": missing required key 'start'", seg);
        r.scalar(seg, "start", path + ".start", s.start_step);
        r.scalar(seg, "end", path + ".end", s.end_step);
        if (auto sh = r.named(seg, "shape", path + ".shape", shape_from_string)) s.shape = *sh;
        r.scalar(seg, "magnitude", path + ".magnitude", s.magnitude);
        if (seg["values"].IsDefined() && !seg["values"].IsNull()) {
            const Vector v = r.numbers(seg["values"], path + ".values");
            s.custom_values.assign(v.data(), v.data() + v.size());
        }
        if (s.shape == AttackShape::ramp && s.end_step == kOpenEnd) {
            r.fail(path + ": a ramp needs an 'end' step", seg);
        }
        if (s.shape == AttackShape::custom && s.custom_values.empty()) {
            r.fail(path + ": a custom segment needs 'values'", seg);
        }
        if (s.shape == AttackShape::custom && s.end_step == kOpenEnd) {
            s.end_step = s.start_step + static_cast<TimeIndex>(s.custom_values.size()) - 1;
        }
        attack.segments.push_back(std::move(s));
    }
}

void read_sim(const Reader& r, const YAML::Node& node, ScenarioConfig& cfg) {
    r.check_keys(node, "sim", {"x0", "total_steps", "halt_on_alarm"});
    r.vector(node, "x0", "sim.x0", cfg.x0, 2);
    r.scalar(node, "total_steps", "sim.total_steps", cfg.total_steps);
    r.scalar(node, "halt_on_alarm", "sim.halt_on_alarm", cfg.halt_on_alarm);
}

}  // namespace

Override parse_override(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ScenarioError("override '" + std::string(text) + "' must look like key.path=value");
    }
    return Override{std::string(text.substr(0, eq)), std::string(text.substr(eq + 1))};
}

ScenarioConfig parse_scenario(const std::string& text, std::span<const Override> overrides,
                              const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg, e.mark.line + 1);
    }
    Reader reader(source, root);
    for (const auto& o : overrides) reader.apply(o);

    ScenarioConfig cfg;
    const YAML::Node& doc = reader.root();
    if (!doc.IsDefined() || doc.IsNull()) {
        // An empty document is the default scenario.
    } else {
        reader.check_keys(doc, "", {"plant", "mpc", "detector", "noise", "attack", "sim"});
        try {
            if (doc["plant"]) read_plant(reader, doc["plant"], cfg.plant);
            if (doc["mpc"]) read_mpc(reader, doc["mpc"], cfg.mpc);
            if (doc["detector"]) read_detector(reader, doc["detector"], cfg.detector);
            if (doc["noise"]) read_noise(reader, doc["noise"], cfg.noise);
            if (doc["attack"]) read_attack(reader, doc["attack"], cfg.attack);
            if (doc["sim"]) read_sim(reader, doc["sim"], cfg);
        } catch (const YAML::Exception& e) {
            throw reader.error(e.msg, e.mark.is_null() ? std::nullopt : std::optional<int>(e.mark.line + 1));
        }
    }

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw reader.error(e.what(), reader.locate(e.what()));
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path, std::span<const Override> overrides) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path.string() + ": cannot open file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str(), overrides, path.string());
}

}  // namespace mpcguard
