#include "svlp/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "svlp/spde2d.hpp"

namespace svlp {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ValidationError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ValidationError(where + "." + it.key() + ": unknown key");
}

double get_num(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) throw ValidationError(where + "." + key + ": missing");
    if (!obj[key].is_number()) throw ValidationError(where + "." + key + ": expected number");
    return obj[key].get<double>();
}

double get_num_or(const json& obj, const std::string& where, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ValidationError(where + "." + key + ": expected number");
    return obj[key].get<double>();
}

FieldSampler parse_sampler(const json& obj, const std::string& where) {
    require_keys(obj, where, {"type", "value", "lo", "hi", "mu", "sigma"});
    const std::string type = obj.value("type", "point");
    if (type == "point") return FieldSampler::point(get_num(obj, where, "value"));
    if (type == "uniform")
        return FieldSampler::uniform(get_num(obj, where, "lo"), get_num(obj, where, "hi"));
    if (type == "lognormal")
        return FieldSampler::lognormal(get_num(obj, where, "mu"), get_num(obj, where, "sigma"));
    throw ValidationError(where + ".type: expected point|uniform|lognormal");
}

}  // namespace

uint64_t RunConfig::market_key() const {
    return market_seed ? *market_seed : derive_key(master_seed, stream::market);
}

uint64_t RunConfig::coeff_key() const {
    return coeff_seed ? *coeff_seed : derive_key(master_seed, stream::coeffs);
}

void RunConfig::validate() const {
    if (!(T > 0.0)) throw ValidationError("T: must be > 0");
    if (steps < 1) throw ValidationError("steps: must be >= 1");
    if (N < 1) throw ValidationError("N: must be >= 1");
    if (n_coeff_samples < 1) throw ValidationError("n_coeff_samples: must be >= 1");
    if (workers < 1) throw ValidationError("workers: must be >= 1");
    global.validate();
    initial.validate();
    grid.validate();
    if (coeffs.is_point_mass()) {
        CounterRng probe(0);
        coeffs.sample(probe).validate(strict);
    }
    if (!(tranche.attachment >= 0.0 && tranche.attachment < tranche.detachment &&
          tranche.detachment <= 1.0))
        throw ValidationError("tranche: need 0 <= attachment < detachment <= 1");
    for (int n : ladder)
        if (n < 1) throw ValidationError("ladder: entries must be >= 1");
}

RunConfig parse_config(const json& doc) {
    require_keys(doc, "config",
                 {"mode", "T", "steps", "N", "n_coeff_samples", "validation", "seeds",
                  "coeff", "global", "initial", "grid", "scheme", "output", "tranche",
                  "ladder", "workers"});
    RunConfig cfg;

    const std::string mode = doc.value("mode", "both");
    if (mode == "particles")
        cfg.mode = RunMode::Particles;
    else if (mode == "spde")
        cfg.mode = RunMode::Spde;
    else if (mode == "both")
        cfg.mode = RunMode::Both;
    else
        throw ValidationError("mode: expected particles|spde|both");

    cfg.T = get_num_or(doc, "config", "T", 1.0);
    cfg.steps = static_cast<int>(get_num_or(doc, "config", "steps", 1000));
    cfg.N = static_cast<int>(get_num_or(doc, "config", "N", 10000));
    cfg.n_coeff_samples = static_cast<int>(get_num_or(doc, "config", "n_coeff_samples", 1));
    cfg.workers = static_cast<int>(get_num_or(doc, "config", "workers", 1));

    const std::string validation = doc.value("validation", "strict");
    if (validation == "strict")
        cfg.strict = true;
    else if (validation == "permissive")
        cfg.strict = false;
    else
        throw ValidationError("validation: expected strict|permissive");

    if (doc.contains("seeds")) {
        const json& s = doc["seeds"];
        require_keys(s, "seeds", {"master", "market", "coeffs"});
        cfg.master_seed = static_cast<uint64_t>(get_num_or(s, "seeds", "master", 1));
        if (s.contains("market"))
            cfg.market_seed = static_cast<uint64_t>(get_num(s, "seeds", "market"));
        if (s.contains("coeffs"))
            cfg.coeff_seed = static_cast<uint64_t>(get_num(s, "seeds", "coeffs"));
    }

    if (!doc.contains("coeff")) throw ValidationError("coeff: missing");
    {
        const json& c = doc["coeff"];
        require_keys(c, "coeff", {"type", "k", "theta", "xi", "r", "rho1", "rho2"});
        const std::string type = c.value("type", "point");
        if (type == "point") {
            CoeffVector v;
            v.k = get_num(c, "coeff", "k");
            v.theta = get_num(c, "coeff", "theta");
            v.xi = get_num(c, "coeff", "xi");
            v.r = get_num(c, "coeff", "r");
            v.rho1 = get_num(c, "coeff", "rho1");
            v.rho2 = get_num(c, "coeff", "rho2");
            cfg.coeffs = CoeffDistribution::point_mass(v, cfg.strict);
        } else if (type == "distribution") {
            auto field = [&](const char* name) -> const json& {
                if (!c.contains(name))
                    throw ValidationError(std::string("coeff.") + name + ": missing");
                return c[name];
            };
            cfg.coeffs.k = parse_sampler(field("k"), "coeff.k");
            cfg.coeffs.theta = parse_sampler(field("theta"), "coeff.theta");
            cfg.coeffs.xi = parse_sampler(field("xi"), "coeff.xi");
            cfg.coeffs.r = parse_sampler(field("r"), "coeff.r");
            cfg.coeffs.rho1 = parse_sampler(field("rho1"), "coeff.rho1");
            cfg.coeffs.rho2 = parse_sampler(field("rho2"), "coeff.rho2");
            cfg.coeffs.strict = cfg.strict;
        } else {
            throw ValidationError("coeff.type: expected point|distribution");
        }
    }

    if (doc.contains("global")) {
        const json& g = doc["global"];
        require_keys(g, "global", {"rho3", "w1", "b1", "h"});
        cfg.global.rho3 = get_num_or(g, "global", "rho3", 0.0);
        cfg.global.w1 = get_num_or(g, "global", "w1", 1.0);
        cfg.global.b1 = get_num_or(g, "global", "b1", 1.0);
        if (g.contains("h")) {
            const json& h = g["h"];
            require_keys(h, "global.h", {"kind", "points"});
            const std::string kind = h.value("kind", "sqrt");
            if (kind == "sqrt")
                cfg.global.h = HFunction::sqrt();
            else if (kind == "identity")
                cfg.global.h = HFunction::identity();
            else if (kind == "tabulated") {
                if (!h.contains("points") || !h["points"].is_array())
                    throw ValidationError("global.h.points: expected array of [y, h] pairs");
                std::vector<std::pair<double, double>> table;
                for (const auto& p : h["points"]) {
                    if (!p.is_array() || p.size() != 2)
                        throw ValidationError("global.h.points: expected [y, h] pairs");
                    table.emplace_back(p[0].get<double>(), p[1].get<double>());
                }
                cfg.global.h = HFunction::tabulated(std::move(table));
            } else {
                throw ValidationError("global.h.kind: expected sqrt|identity|tabulated");
            }
        }
    }
    cfg.global.horizon = cfg.T;

    if (doc.contains("initial")) {
        const json& ini = doc["initial"];
        require_keys(ini, "initial", {"x0", "sigma0"});
        if (ini.contains("x0")) {
            const json& x = ini["x0"];
            require_keys(x, "initial.x0", {"type", "value", "mu", "sigma"});
            const std::string type = x.value("type", "point");
            if (type == "point") {
                cfg.initial.x0.kind = InitialLaw::X0::Kind::Point;
                cfg.initial.x0.a = get_num(x, "initial.x0", "value");
            } else if (type == "lognormal") {
                cfg.initial.x0.kind = InitialLaw::X0::Kind::Lognormal;
                cfg.initial.x0.a = get_num(x, "initial.x0", "mu");
                cfg.initial.x0.b = get_num(x, "initial.x0", "sigma");
            } else {
                throw ValidationError("initial.x0.type: expected point|lognormal");
            }
        }
        if (ini.contains("sigma0")) {
            const json& s = ini["sigma0"];
            require_keys(s, "initial.sigma0", {"type", "value", "shape", "scale"});
            const std::string type = s.value("type", "point");
            if (type == "point") {
                cfg.initial.sigma0.kind = InitialLaw::Sigma0::Kind::Point;
                cfg.initial.sigma0.a = get_num(s, "initial.sigma0", "value");
            } else if (type == "gamma") {
                cfg.initial.sigma0.kind = InitialLaw::Sigma0::Kind::Gamma;
                cfg.initial.sigma0.a = get_num(s, "initial.sigma0", "shape");
                cfg.initial.sigma0.b = get_num(s, "initial.sigma0", "scale");
            } else {
                throw ValidationError("initial.sigma0.type: expected point|gamma");
            }
        }
    }

    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        require_keys(g, "grid", {"cells_x", "cells_y", "xmax", "ymax"});
        cfg.grid.I = static_cast<int>(get_num_or(g, "grid", "cells_x", 64));
        cfg.grid.J = static_cast<int>(get_num_or(g, "grid", "cells_y", 64));
        cfg.grid.xmax = get_num_or(g, "grid", "xmax", 4.0);
        if (g.contains("ymax")) {
            cfg.grid.ymax = get_num(g, "grid", "ymax");
            cfg.ymax_explicit = true;
        }
    }
    if (!cfg.ymax_explicit) {
        if (cfg.coeffs.is_point_mass()) {
            CounterRng probe(0);
            cfg.grid.ymax = default_ymax(cfg.coeffs.sample(probe));
        } else {
            throw ValidationError("grid.ymax: required when coefficients are random");
        }
    }

    if (doc.contains("scheme")) {
        const json& s = doc["scheme"];
        require_keys(s, "scheme", {"cfl_1d", "cfl_2d"});
        cfg.scheme.cfl_1d = get_num_or(s, "scheme", "cfl_1d", 0.5);
        cfg.scheme.cfl_2d = get_num_or(s, "scheme", "cfl_2d", 2.0);
    }

    if (doc.contains("output")) {
        const json& o = doc["output"];
        require_keys(o, "output", {"dir", "market_path", "trajectories", "field_times"});
        cfg.output.dir = o.value("dir", "runs");
        cfg.output.market_path = o.value("market_path", false);
        cfg.output.trajectories = o.value("trajectories", false);
        if (o.contains("field_times"))
            for (const auto& t : o["field_times"]) cfg.output.field_times.push_back(t.get<double>());
    }

    if (doc.contains("tranche")) {
        const json& t = doc["tranche"];
        require_keys(t, "tranche", {"attachment", "detachment", "n_market_paths"});
        cfg.tranche.attachment = get_num_or(t, "tranche", "attachment", 0.0);
        cfg.tranche.detachment = get_num_or(t, "tranche", "detachment", 1.0);
        cfg.tranche.n_market_paths =
            static_cast<int>(get_num_or(t, "tranche", "n_market_paths", 8));
    }

    if (doc.contains("ladder")) {
        cfg.ladder.clear();
        for (const auto& n : doc["ladder"]) cfg.ladder.push_back(n.get<int>());
    }

    cfg.validate();
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("config: cannot open " + path);
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_config(doc);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    json doc;
    doc["mode"] = cfg.mode == RunMode::Particles  ? "particles"
                  : cfg.mode == RunMode::Spde     ? "spde"
                                                  : "both";
    doc["T"] = cfg.T;
    doc["steps"] = cfg.steps;
    doc["N"] = cfg.N;
    doc["n_coeff_samples"] = cfg.n_coeff_samples;
    doc["validation"] = cfg.strict ? "strict" : "permissive";
    doc["seeds"]["master"] = cfg.master_seed;
    doc["seeds"]["market"] = cfg.market_key();
    doc["seeds"]["coeffs"] = cfg.coeff_key();

    auto sampler_json = [](const FieldSampler& f) {
        json s;
        switch (f.kind) {
            case FieldSampler::Kind::Point:
                s["type"] = "point";
                s["value"] = f.a;
                break;
            case FieldSampler::Kind::Uniform:
                s["type"] = "uniform";
                s["lo"] = f.a;
                s["hi"] = f.b;
                break;
            case FieldSampler::Kind::Lognormal:
                s["type"] = "lognormal";
                s["mu"] = f.a;
                s["sigma"] = f.b;
                break;
        }
        return s;
    };
    if (cfg.coeffs.is_point_mass()) {
        CounterRng probe(0);
        const CoeffVector v = cfg.coeffs.sample(probe);
        doc["coeff"] = {{"type", "point"}, {"k", v.k},       {"theta", v.theta},
                        {"xi", v.xi},      {"r", v.r},       {"rho1", v.rho1},
                        {"rho2", v.rho2}};
    } else {
        doc["coeff"]["type"] = "distribution";
        doc["coeff"]["k"] = sampler_json(cfg.coeffs.k);
        doc["coeff"]["theta"] = sampler_json(cfg.coeffs.theta);
        doc["coeff"]["xi"] = sampler_json(cfg.coeffs.xi);
        doc["coeff"]["r"] = sampler_json(cfg.coeffs.r);
        doc["coeff"]["rho1"] = sampler_json(cfg.coeffs.rho1);
        doc["coeff"]["rho2"] = sampler_json(cfg.coeffs.rho2);
    }

    doc["global"]["rho3"] = cfg.global.rho3;
    doc["global"]["w1"] = cfg.global.w1;
    doc["global"]["b1"] = cfg.global.b1;
    switch (cfg.global.h.kind()) {
        case HFunction::Kind::Sqrt:
            doc["global"]["h"]["kind"] = "sqrt";
            break;
        case HFunction::Kind::Identity:
            doc["global"]["h"]["kind"] = "identity";
            break;
        case HFunction::Kind::Tabulated: {
            doc["global"]["h"]["kind"] = "tabulated";
            json pts = json::array();
            for (const auto& [y, v] : cfg.global.h.table()) pts.push_back({y, v});
            doc["global"]["h"]["points"] = pts;
            break;
        }
    }

    if (cfg.initial.x0.kind == InitialLaw::X0::Kind::Point) {
        doc["initial"]["x0"] = {{"type", "point"}, {"value", cfg.initial.x0.a}};
    } else {
        doc["initial"]["x0"] = {
            {"type", "lognormal"}, {"mu", cfg.initial.x0.a}, {"sigma", cfg.initial.x0.b}};
    }
    if (cfg.initial.sigma0.kind == InitialLaw::Sigma0::Kind::Point) {
        doc["initial"]["sigma0"] = {{"type", "point"}, {"value", cfg.initial.sigma0.a}};
    } else {
        doc["initial"]["sigma0"] = {
            {"type", "gamma"}, {"shape", cfg.initial.sigma0.a}, {"scale", cfg.initial.sigma0.b}};
    }

    doc["grid"] = {{"cells_x", cfg.grid.I},
                   {"cells_y", cfg.grid.J},
                   {"xmax", cfg.grid.xmax},
                   {"ymax", cfg.grid.ymax}};
    doc["scheme"] = {{"cfl_1d", cfg.scheme.cfl_1d}, {"cfl_2d", cfg.scheme.cfl_2d}};
    doc["output"] = {{"dir", cfg.output.dir},
                     {"market_path", cfg.output.market_path},
                     {"trajectories", cfg.output.trajectories},
                     {"field_times", cfg.output.field_times}};
    doc["tranche"] = {{"attachment", cfg.tranche.attachment},
                      {"detachment", cfg.tranche.detachment},
                      {"n_market_paths", cfg.tranche.n_market_paths}};
    doc["ladder"] = cfg.ladder;
    doc["workers"] = cfg.workers;
    return doc;
}

std::string config_hash(const RunConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void apply_override(nlohmann::json& doc, const std::string& keypath,
                    const std::string& value) {
    json* node = &doc;
    size_t pos = 0;
    while (true) {
        const size_t dot = keypath.find('.', pos);
        const std::string key = keypath.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (key.empty()) throw ValidationError("--set: empty key segment in " + keypath);
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

}  // namespace svlp
