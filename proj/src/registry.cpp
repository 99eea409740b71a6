#include "ppde/registry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ppde {

namespace {

double running_max(const PathTree& tree, NodeId n) {
    double best = 0.0;
    for (int j = 0; j <= n.level; ++j) {
        best = std::max(best, tree.value_at(n, j));
    }
    return best;
}

double get_or(const nlohmann::json& params, const char* key, double fallback) {
    return params.is_object() ? params.value(key, fallback) : fallback;
}

}  // namespace

double dyadic_noise(std::uint64_t& state) {
    // splitmix64 step, then a dyadic value k/64 with k in [-64, 64]
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return static_cast<double>(static_cast<std::int64_t>(z % 129) - 64) / 64.0;
}

Generator make_generator(const std::string& name, const nlohmann::json& params) {
    Generator gen;
    gen.name = name;
    gen.rho = [](const PathTree&, NodeId, double, double) { return 0.0; };
    gen.f0 = [](const PathTree&, NodeId) { return 0.0; };
    if (name == "zero") {
        gen.bound = {0.0};
        gen.monotone_in_y = true;
        gen.eval = [](const PathTree&, NodeId, double, double) { return 0.0; };
        return gen;
    }
    if (name == "constant") {
        double c = get_or(params, "c", 1.0);
        gen.bound = {0.0};
        gen.monotone_in_y = true;
        gen.eval = [c](const PathTree&, NodeId, double, double) { return c; };
        gen.f0 = [c](const PathTree&, NodeId) { return std::abs(c); };
        return gen;
    }
    if (name == "linear") {
        double a = get_or(params, "a", 0.5);
        double b = get_or(params, "b", 0.5);
        gen.bound = {std::max(std::abs(a), std::abs(b))};
        gen.monotone_in_y = a >= 0.0;
        gen.eval = [a, b](const PathTree&, NodeId, double y, double z) {
            return a * y + b * z;
        };
        return gen;
    }
    if (name == "pucci") {
        double L = get_or(params, "L", 1.0);
        gen.bound = {L};
        gen.monotone_in_y = true;
        gen.eval = [L](const PathTree&, NodeId, double, double z) {
            return L * std::abs(z);
        };
        return gen;
    }
    if (name == "pucci_plus") {
        double L = get_or(params, "L", 1.0);
        gen.bound = {L};
        gen.monotone_in_y = true;
        gen.eval = [L](const PathTree&, NodeId, double y, double z) {
            return L * std::max(y, 0.0) + L * std::abs(z);
        };
        return gen;
    }
    if (name == "runmax") {
        // Genuinely path dependent: the z-coefficient follows the clipped
        // running maximum of the path.
        double scale = get_or(params, "scale", 0.5);
        double clip = get_or(params, "clip", 1.0);
        double zref = get_or(params, "zref", 4.0);
        gen.bound = {std::abs(scale) * clip};
        gen.monotone_in_y = true;
        gen.eval = [scale, clip](const PathTree& t, NodeId n, double, double z) {
            double m = std::clamp(running_max(t, n), -clip, clip);
            return scale * m * z;
        };
        // The running max is 1-Lipschitz in the forward distance; zref is
        // the documented slope range the modulus is quoted for.
        gen.rho = [scale, zref](const PathTree&, NodeId, double x, double) {
            return std::abs(scale) * x * zref;
        };
        return gen;
    }
    throw std::invalid_argument("unknown generator: " + name);
}

std::vector<RegistryEntry> generator_registry() {
    return {
        {"zero", "{}", "F = 0; rho = 0"},
        {"constant", "{c}", "F = c; rho = 0"},
        {"linear", "{a, b}", "F = a*y + b*z; rho = 0"},
        {"pucci", "{L}", "F = L|z|; rho = 0"},
        {"pucci_plus", "{L}", "F = L*y^+ + L|z|; rho = 0"},
        {"runmax", "{scale, clip, zref}",
         "F = scale*clip(max_s w_s)*z; rho = |scale|*x*zref"},
    };
}

TerminalCondition make_terminal(const std::string& name,
                                const nlohmann::json& params,
                                const PathTree& tree) {
    TerminalCondition xi;
    xi.values.resize(tree.leaf_count());
    if (name == "bT") {
        for (std::uint32_t b = 0; b < tree.leaf_count(); ++b) {
            xi.values[b] = tree.value_of(tree.leaf(b));
        }
        return xi;
    }
    if (name == "abs") {
        for (std::uint32_t b = 0; b < tree.leaf_count(); ++b) {
            xi.values[b] = std::abs(tree.value_of(tree.leaf(b)));
        }
        return xi;
    }
    if (name == "maxpath") {
        for (std::uint32_t b = 0; b < tree.leaf_count(); ++b) {
            xi.values[b] = running_max(tree, tree.leaf(b));
        }
        return xi;
    }
    if (name == "zero" || name == "constant") {
        double c = name == "zero" ? 0.0 : get_or(params, "c", 1.0);
        std::fill(xi.values.begin(), xi.values.end(), c);
        return xi;
    }
    if (name == "random") {
        std::uint64_t state = static_cast<std::uint64_t>(get_or(params, "seed", 1.0));
        for (auto& v : xi.values) v = dyadic_noise(state);
        return xi;
    }
    throw std::invalid_argument("unknown terminal condition: " + name);
}

std::vector<RegistryEntry> terminal_registry() {
    return {
        {"bT", "{}", "xi = w_T"},
        {"abs", "{}", "xi = |w_T|"},
        {"maxpath", "{}", "xi = max_s w_s"},
        {"zero", "{}", "xi = 0"},
        {"constant", "{c}", "xi = c"},
        {"random", "{seed}", "dyadic noise in [-1, 1]"},
    };
}

TreeProcess make_obstacle(const std::string& name, const nlohmann::json& params,
                          const PathTree& tree) {
    if (name == "b") {
        return make_process(tree, [](const PathTree& t, NodeId n) {
            return t.value_of(n);
        });
    }
    if (name == "absb") {
        return make_process(tree, [](const PathTree& t, NodeId n) {
            return std::abs(t.value_of(n));
        });
    }
    if (name == "runmax") {
        return make_process(tree, [](const PathTree& t, NodeId n) {
            return running_max(t, n);
        });
    }
    if (name == "timedecay") {
        double c = get_or(params, "c", 1.0);
        return make_process(tree, [c](const PathTree& t, NodeId n) {
            return c - t.time_of(n);
        });
    }
    if (name == "constant") {
        double c = get_or(params, "c", 1.0);
        return TreeProcess(tree, c);
    }
    if (name == "random") {
        std::uint64_t state = static_cast<std::uint64_t>(get_or(params, "seed", 1.0));
        TreeProcess x(tree);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = dyadic_noise(state);
        return x;
    }
    if (name == "values") {
        TreeProcess x(tree, params.is_object() ? params.value("fill", 0.0) : 0.0);
        if (params.is_object() && params.contains("values")) {
            for (const auto& [address, value] : params.at("values").items()) {
                x.at(tree.parse_point(address)) = value.get<double>();
            }
        }
        return x;
    }
    throw std::invalid_argument("unknown obstacle: " + name);
}

std::vector<RegistryEntry> obstacle_registry() {
    return {
        {"b", "{}", "X = w_t"},
        {"absb", "{}", "X = |w_t|"},
        {"runmax", "{}", "X = max_s w_s"},
        {"timedecay", "{c}", "X = c - t"},
        {"constant", "{c}", "X = c"},
        {"random", "{seed}", "dyadic noise in [-1, 1]"},
        {"values", "{fill, values: {\"k:bits\": v}}", "explicit per-node values"},
    };
}

}  // namespace ppde
