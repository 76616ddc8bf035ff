#include "telescale/scenario.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "telescale/error.hpp"

namespace telescale {
namespace {

using nlohmann::json;

double length_unit(std::string_view units) {
    if (units == "mm") return 1e-3;
    if (units == "m") return 1.0;
    throw ScenarioError("units must be \"mm\" or \"m\", got \"" + std::string(units) + "\"");
}

/// Field access on one JSON object with unknown-key detection.
class Reader {
public:
    Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) throw ScenarioError(where_ + ": expected an object");
    }

    bool has(const char* key) {
        seen_.insert(key);
        return obj_.contains(key) && !obj_.at(key).is_null();
    }

    double number(const char* key, double fallback, double scale = 1.0) {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_number()) throw ScenarioError(where_ + "." + key + ": expected a number");
        return v.get<double>() * scale;
    }

    std::optional<double> optional_number(const char* key, double scale = 1.0) {
        if (!has(key)) return std::nullopt;
        return number(key, 0.0, scale);
    }

    std::string text(const char* key, std::string fallback) {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_string()) throw ScenarioError(where_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    Vec3 vec(const char* key, const Vec3& fallback, double scale) {
        if (!has(key)) return fallback;
        return to_vec(obj_.at(key), where_ + "." + key, scale);
    }

    const json* child(const char* key) {
        if (!has(key)) return nullptr;
        return &obj_.at(key);
    }

    void finish() const {
        for (const auto& [key, _] : obj_.items()) {
            if (!seen_.contains(key)) throw ScenarioError(where_ + ": unknown key \"" + key + "\"");
        }
    }

    static Vec3 to_vec(const json& v, const std::string& where, double scale) {
        if (!v.is_array() || v.size() != 3) throw ScenarioError(where + ": expected [x, y, z]");
        Vec3 out;
        for (int i = 0; i < 3; ++i) {
            if (!v[i].is_number()) throw ScenarioError(where + ": expected numbers");
            out[i] = v[i].get<double>() * scale;
        }
        return out;
    }

private:
    const json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

json vec_json(const Vec3& v, double inv) { return json::array({v.x() * inv, v.y() * inv, v.z() * inv}); }

std::string_view projection_name(ProjectionMode m) {
    return m == ProjectionMode::Verbatim ? "verbatim" : "shifted_origin";
}

std::string_view distance_name(DistanceMode m) {
    return m == DistanceMode::ProjectedPegs ? "projected_pegs" : "raw_pegs";
}

ScalingStrategy constant(double c) { return ConstantScaling{c}; }

Scenario with(Scenario s, std::string id, ScalingStrategy scaling, double round_trip) {
    s.id = std::move(id);
    s.scaling = scaling;
    s.round_trip_s = round_trip;
    return s;
}

}  // namespace

ClockConfig Scenario::clock() const { return make_clock(rate_hz, round_trip_s); }

OperatorContext Scenario::operator_context() const {
    return OperatorContext{task, plan, scaling, clock(), std::nullopt};
}

void Scenario::validate() const {
    const ClockConfig c = clock();
    telescale::validate(scaling);
    task.geometry.validate();
    task.layout.validate();
    if (std::holds_alternative<PositionalScaling>(scaling)) {
        (void)fit_plane(task.layout);
    }
    (void)make_world(task);
    plan.validate();
    if (const auto* p = std::get_if<PursuitConfig>(&op)) p->validate();
    if (const auto* m = std::get_if<MoveAndWaitConfig>(&op)) m->validate(c);
    if (!std::isfinite(timeout_s) || timeout_s <= 0.0) throw ConfigError("timeout_s must be positive");
}

TaskSetup default_task() {
    TaskSetup task;
    task.layout.centers = {Vec3(0.030, 0.040, 0.0), Vec3(0.030, 0.060, 0.0), Vec3(0.070, 0.040, 0.0),
                           Vec3(0.070, 0.060, 0.0)};
    task.rings = {RingSpec{RingId::Front, 0, 2}, RingSpec{RingId::Back, 1, 3}};
    task.gripper_home = {Vec3(0.015, 0.050, 0.010), Vec3(0.085, 0.050, 0.010)};
    return task;
}

Scenario default_scenario() {
    Scenario s;
    s.task = default_task();
    return s;
}

std::vector<std::string> builtin_scenario_names() {
    return {"default",   "zero_delay_perfect", "mirrored",  "one_ring",   "unreachable", "move_and_wait",
            "const-0.3", "const-0.2",          "const-0.1", "positional", "velocity"};
}

Scenario builtin_scenario(std::string_view name) {
    Scenario s = default_scenario();
    if (name == "default") return s;
    if (name == "zero_delay_perfect") {
        s.id = "zero_delay_perfect";
        s.scaling = constant(1.0);
        auto& op = std::get<PursuitConfig>(s.op);
        op.noise_std = 0.0;
        op.participant_spread = 0.0;
        return s;
    }
    if (name == "mirrored") {
        s.id = "mirrored";
        s.task.rings = {RingSpec{RingId::Front, 2, 0}, RingSpec{RingId::Back, 3, 1}};
        return s;
    }
    if (name == "one_ring") {
        s.id = "one_ring";
        s.task.rings = {RingSpec{RingId::Front, 0, 2}};
        return s;
    }
    if (name == "unreachable") {
        s.id = "unreachable";
        s.task.layout.centers[2] = Vec3(0.160, 0.040, 0.0);
        s.task.layout.centers[3] = Vec3(0.160, 0.060, 0.0);
        s.timeout_s = 60.0;
        return s;
    }
    if (name == "move_and_wait") {
        s.id = "move_and_wait";
        s.op = MoveAndWaitConfig{};
        return s;
    }
    for (const auto& preset : preset_conditions("preset5", 0.0)) {
        if (preset.id == name) return preset;
    }
    throw ScenarioError("unknown scenario \"" + std::string(name) + "\"");
}

std::vector<Scenario> preset_conditions(std::string_view name, double round_trip_s) {
    if (name != "preset5") throw ScenarioError("unknown condition preset \"" + std::string(name) + "\"");
    const Scenario base = default_scenario();
    return {
        with(base, "const-0.3", constant(0.3), round_trip_s),
        with(base, "const-0.2", constant(0.2), round_trip_s),
        with(base, "const-0.1", constant(0.1), round_trip_s),
        with(base, "positional", PositionalScaling{}, round_trip_s),
        with(base, "velocity", VelocityScaling{}, round_trip_s),
    };
}

json strategy_to_json(const ScalingStrategy& strategy) {
    json out;
    if (const auto* c = std::get_if<ConstantScaling>(&strategy)) {
        out = {{"kind", "constant"}, {"scale_m", c->scale_m}};
    } else if (const auto* p = std::get_if<PositionalScaling>(&strategy)) {
        out = {{"kind", "positional"}, {"scale_m", p->scale_m}, {"k", p->k},
               {"min_scale", p->min_scale}, {"max_scale", p->max_scale}};
    } else {
        const auto& v = std::get<VelocityScaling>(strategy);
        out = {{"kind", "velocity"}, {"v1", v.v1}, {"v2", v.v2}};
        out["ceiling"] = v.ceiling ? json(*v.ceiling) : json(nullptr);
    }
    return out;
}

ScalingStrategy strategy_from_json(const json& doc) {
    Reader r(doc, "scaling");
    const std::string kind = r.text("kind", "");
    ScalingStrategy out;
    if (kind == "constant") {
        ConstantScaling c;
        c.scale_m = r.number("scale_m", c.scale_m);
        out = c;
    } else if (kind == "positional") {
        PositionalScaling p;
        p.scale_m = r.number("scale_m", p.scale_m);
        p.k = r.number("k", p.k);
        p.min_scale = r.number("min_scale", p.min_scale);
        p.max_scale = r.number("max_scale", p.max_scale);
        out = p;
    } else if (kind == "velocity") {
        VelocityScaling v;
        v.v1 = r.number("v1", v.v1);
        v.v2 = r.number("v2", v.v2);
        v.ceiling = r.optional_number("ceiling");
        out = v;
    } else {
        throw ScenarioError("scaling.kind must be constant, positional or velocity");
    }
    r.finish();
    return out;
}

json scenario_to_json(const Scenario& s, std::string_view units) {
    const double inv = 1.0 / length_unit(units);
    json doc;
    doc["id"] = s.id;
    doc["units"] = std::string(units);
    doc["clock"] = {{"rate_hz", s.rate_hz}, {"round_trip_delay_s", s.round_trip_s}};
    doc["scaling"] = strategy_to_json(s.scaling);
    doc["plane"] = {{"projection", projection_name(s.projection)}, {"distance", distance_name(s.distance)}};

    json pegs = json::array();
    for (const auto& c : s.task.layout.centers) pegs.push_back(vec_json(c, inv));
    doc["pegs"] = pegs;
    json rings = json::array();
    for (const auto& ring : s.task.rings) {
        rings.push_back({{"id", to_string(ring.id)}, {"from", ring.from_peg}, {"to", ring.to_peg}});
    }
    doc["rings"] = rings;
    doc["gripper_home"] = {{"left", vec_json(s.task.gripper_home.left, inv)},
                           {"right", vec_json(s.task.gripper_home.right, inv)}};

    const auto& g = s.task.geometry;
    doc["geometry"] = {
        {"peg_radius", g.peg_radius * inv},
        {"peg_height", g.peg_height * inv},
        {"ring_inner_radius", g.ring_inner_radius * inv},
        {"ring_tube_radius", g.ring_tube_radius * inv},
        {"grasp_radius", g.grasp_radius * inv},
        {"gripper_radius", g.gripper_radius * inv},
        {"stretch_threshold", g.stretch_threshold * inv},
        {"peg_move_threshold", g.peg_move_threshold * inv},
        {"peg_topple_threshold", g.peg_topple_threshold * inv},
        {"ground_tolerance", g.ground_tolerance * inv},
        {"fall_speed", g.fall_speed * inv},
        {"workspace_min", vec_json(g.workspace_min, inv)},
        {"workspace_max", vec_json(g.workspace_max, inv)},
    };

    if (const auto* p = std::get_if<PursuitConfig>(&s.op)) {
        doc["operator"] = {
            {"kind", "pursuit"},
            {"gain", p->gain},
            {"gross_gain", p->gross_gain},
            {"fine_speed", p->fine_speed * inv},
            {"gross_speed", p->gross_speed * inv},
            {"max_hand_speed", p->max_hand_speed * inv},
            {"fine_caution", p->fine_caution},
            {"gross_caution", p->gross_caution},
            {"reaction_delay", p->reaction_delay},
            {"arrival_tolerance", p->arrival_tolerance * inv},
            {"gross_tolerance", p->gross_tolerance * inv},
            {"settle_time", p->settle_time},
            {"settle_speed", p->settle_speed * inv},
            {"noise_std", p->noise_std * inv},
            {"noise_tau", p->noise_tau},
            {"participant_spread", p->participant_spread},
            {"frame_rate_hz", p->frame_rate_hz},
        };
    } else {
        const auto& m = std::get<MoveAndWaitConfig>(s.op);
        doc["operator"] = {
            {"kind", "move_and_wait"},
            {"step_size", m.step_size * inv},
            {"gross_step_size", m.gross_step_size * inv},
            {"move_duration", m.move_duration},
            {"wait_time", m.wait_time ? json(*m.wait_time) : json(nullptr)},
            {"arrival_tolerance", m.arrival_tolerance * inv},
            {"gross_tolerance", m.gross_tolerance * inv},
            {"settle_time", m.settle_time},
            {"settle_speed", m.settle_speed * inv},
            {"reaction_delay", m.reaction_delay},
            {"frame_rate_hz", m.frame_rate_hz},
        };
    }

    const auto& pl = s.plan;
    doc["plan"] = {
        {"hover_clearance", pl.hover_clearance * inv},
        {"approach_height", pl.approach_height * inv},
        {"grasp_lift", pl.grasp_lift * inv},
        {"lift_clearance", pl.lift_clearance * inv},
        {"handoff_height", pl.handoff_height * inv},
        {"handoff_standoff", pl.handoff_standoff * inv},
        {"align_clearance", pl.align_clearance * inv},
        {"place_depth", pl.place_depth * inv},
        {"retreat_distance", pl.retreat_distance * inv},
        {"await_timeout", pl.await_timeout},
    };
    doc["timeout_s"] = s.timeout_s;
    return doc;
}

Scenario scenario_from_json(const json& doc) {
    Scenario s = default_scenario();
    Reader root(doc, "scenario");
    const double L = length_unit(root.text("units", "m"));
    s.id = root.text("id", s.id);

    if (const json* c = root.child("clock")) {
        Reader r(*c, "clock");
        s.rate_hz = r.number("rate_hz", s.rate_hz);
        s.round_trip_s = r.number("round_trip_delay_s", s.round_trip_s);
        r.finish();
    }
    if (const json* c = root.child("scaling")) s.scaling = strategy_from_json(*c);
    if (const json* c = root.child("plane")) {
        Reader r(*c, "plane");
        const std::string projection = r.text("projection", "verbatim");
        const std::string distance = r.text("distance", "projected_pegs");
        if (projection == "verbatim") s.projection = ProjectionMode::Verbatim;
        else if (projection == "shifted_origin") s.projection = ProjectionMode::ShiftedOrigin;
        else throw ScenarioError("plane.projection must be verbatim or shifted_origin");
        if (distance == "projected_pegs") s.distance = DistanceMode::ProjectedPegs;
        else if (distance == "raw_pegs") s.distance = DistanceMode::RawPegs;
        else throw ScenarioError("plane.distance must be projected_pegs or raw_pegs");
        r.finish();
    }
    if (const json* c = root.child("pegs")) {
        if (!c->is_array() || c->size() != 4) throw ScenarioError("pegs: expected exactly 4 [x, y, z] entries");
        for (std::size_t i = 0; i < 4; ++i) {
            s.task.layout.centers[i] = Reader::to_vec((*c)[i], "pegs[" + std::to_string(i) + "]", L);
        }
    }
    if (const json* c = root.child("rings")) {
        if (!c->is_array()) throw ScenarioError("rings: expected an array");
        s.task.rings.clear();
        for (const auto& entry : *c) {
            Reader r(entry, "rings[]");
            RingSpec ring;
            try {
                ring.id = ring_id_from_string(r.text("id", "front"));
            } catch (const ConfigError& e) {
                throw ScenarioError(std::string("rings[].id: ") + e.what());
            }
            ring.from_peg = static_cast<int>(r.number("from", ring.from_peg));
            ring.to_peg = static_cast<int>(r.number("to", ring.to_peg));
            r.finish();
            s.task.rings.push_back(ring);
        }
    }
    if (const json* c = root.child("gripper_home")) {
        Reader r(*c, "gripper_home");
        s.task.gripper_home.left = r.vec("left", s.task.gripper_home.left, L);
        s.task.gripper_home.right = r.vec("right", s.task.gripper_home.right, L);
        r.finish();
    }
    if (const json* c = root.child("geometry")) {
        Reader r(*c, "geometry");
        auto& g = s.task.geometry;
        g.peg_radius = r.number("peg_radius", g.peg_radius, L);
        g.peg_height = r.number("peg_height", g.peg_height, L);
        g.ring_inner_radius = r.number("ring_inner_radius", g.ring_inner_radius, L);
        g.ring_tube_radius = r.number("ring_tube_radius", g.ring_tube_radius, L);
        g.grasp_radius = r.number("grasp_radius", g.grasp_radius, L);
        g.gripper_radius = r.number("gripper_radius", g.gripper_radius, L);
        g.stretch_threshold = r.number("stretch_threshold", g.stretch_threshold, L);
        g.peg_move_threshold = r.number("peg_move_threshold", g.peg_move_threshold, L);
        g.peg_topple_threshold = r.number("peg_topple_threshold", g.peg_topple_threshold, L);
        g.ground_tolerance = r.number("ground_tolerance", g.ground_tolerance, L);
        g.fall_speed = r.number("fall_speed", g.fall_speed, L);
        g.workspace_min = r.vec("workspace_min", g.workspace_min, L);
        g.workspace_max = r.vec("workspace_max", g.workspace_max, L);
        r.finish();
    }
    if (const json* c = root.child("operator")) {
        Reader r(*c, "operator");
        const std::string kind = r.text("kind", "pursuit");
        if (kind == "pursuit") {
            PursuitConfig p;
            p.gain = r.number("gain", p.gain);
            p.gross_gain = r.number("gross_gain", p.gross_gain);
            p.fine_speed = r.number("fine_speed", p.fine_speed, L);
            p.gross_speed = r.number("gross_speed", p.gross_speed, L);
            p.max_hand_speed = r.number("max_hand_speed", p.max_hand_speed, L);
            p.fine_caution = r.number("fine_caution", p.fine_caution);
            p.gross_caution = r.number("gross_caution", p.gross_caution);
            p.reaction_delay = r.number("reaction_delay", p.reaction_delay);
            p.arrival_tolerance = r.number("arrival_tolerance", p.arrival_tolerance, L);
            p.gross_tolerance = r.number("gross_tolerance", p.gross_tolerance, L);
            p.settle_time = r.number("settle_time", p.settle_time);
            p.settle_speed = r.number("settle_speed", p.settle_speed, L);
            p.noise_std = r.number("noise_std", p.noise_std, L);
            p.noise_tau = r.number("noise_tau", p.noise_tau);
            p.participant_spread = r.number("participant_spread", p.participant_spread);
            p.frame_rate_hz = r.number("frame_rate_hz", p.frame_rate_hz);
            s.op = p;
        } else if (kind == "move_and_wait") {
            MoveAndWaitConfig m;
            m.step_size = r.number("step_size", m.step_size, L);
            m.gross_step_size = r.number("gross_step_size", m.gross_step_size, L);
            m.move_duration = r.number("move_duration", m.move_duration);
            m.wait_time = r.optional_number("wait_time");
            m.arrival_tolerance = r.number("arrival_tolerance", m.arrival_tolerance, L);
            m.gross_tolerance = r.number("gross_tolerance", m.gross_tolerance, L);
            m.settle_time = r.number("settle_time", m.settle_time);
            m.settle_speed = r.number("settle_speed", m.settle_speed, L);
            m.reaction_delay = r.number("reaction_delay", m.reaction_delay);
            m.frame_rate_hz = r.number("frame_rate_hz", m.frame_rate_hz);
            s.op = m;
        } else {
            throw ScenarioError("operator.kind must be pursuit or move_and_wait");
        }
        r.finish();
    }
    if (const json* c = root.child("plan")) {
        Reader r(*c, "plan");
        auto& pl = s.plan;
        pl.hover_clearance = r.number("hover_clearance", pl.hover_clearance, L);
        pl.approach_height = r.number("approach_height", pl.approach_height, L);
        pl.grasp_lift = r.number("grasp_lift", pl.grasp_lift, L);
        pl.lift_clearance = r.number("lift_clearance", pl.lift_clearance, L);
        pl.handoff_height = r.number("handoff_height", pl.handoff_height, L);
        pl.handoff_standoff = r.number("handoff_standoff", pl.handoff_standoff, L);
        pl.align_clearance = r.number("align_clearance", pl.align_clearance, L);
        pl.place_depth = r.number("place_depth", pl.place_depth, L);
        pl.retreat_distance = r.number("retreat_distance", pl.retreat_distance, L);
        pl.await_timeout = r.number("await_timeout", pl.await_timeout);
        r.finish();
    }
    s.timeout_s = root.number("timeout_s", s.timeout_s);
    root.finish();

    try {
        s.validate();
    } catch (const ConfigError& e) {
        throw ScenarioError(std::string("invalid scenario: ") + e.what());
    } catch (const DegenerateLayoutError& e) {
        throw ScenarioError(std::string("invalid scenario: ") + e.what());
    }
    return s;
}

Scenario load_scenario(std::string_view name_or_path) {
    const auto names = builtin_scenario_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
        return builtin_scenario(name_or_path);
    }

    std::filesystem::path path(name_or_path);
    if (!std::filesystem::exists(path)) {
        bool found = false;
        if (const char* search = std::getenv("TELESCALE_SCENARIO_PATH")) {
            std::stringstream dirs(search);
            std::string dir;
            while (!found && std::getline(dirs, dir, ':')) {
                if (dir.empty()) continue;
                for (const auto& candidate : {std::filesystem::path(dir) / path,
                                              std::filesystem::path(dir) / (std::string(name_or_path) + ".json")}) {
                    if (std::filesystem::is_regular_file(candidate)) {
                        path = candidate;
                        found = true;
                        break;
                    }
                }
            }
        }
        if (!found) throw ScenarioError("scenario not found: " + std::string(name_or_path));
    }

    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    }
    try {
        return scenario_from_json(doc);
    } catch (const ScenarioError& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    }
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path, std::string_view units) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scenario file " + path.string());
    out << scenario_to_json(scenario, units).dump(2) << '\n';
    if (!out) throw IoError("failed writing scenario file " + path.string());
}

}  // namespace telescale
