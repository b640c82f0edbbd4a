#include "scenario.hpp"

#include <algorithm>
#include <set>

#include "random.hpp"

namespace mimsi {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& problems) {
    std::string out = "invalid scenario:";
    for (const auto& p : problems) out += "\n  " + p;
    return out;
}

/// Walks a JSON document, collecting errors with their field paths instead
/// of stopping at the first one.
class Reader {
public:
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    void allow_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> keys) {
        if (!obj.is_object()) return;
        for (const auto& [k, _] : obj.items()) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(sub(path, k), "unknown field");
        }
    }

    static std::string sub(const std::string& path, std::string_view key) {
        return path.empty() ? std::string(key) : path + "." + std::string(key);
    }
    static std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

    const json* field(const json& obj, const std::string& path, std::string_view key, bool required) {
        if (!obj.is_object()) {
            fail(path, "expected an object");
            return nullptr;
        }
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) fail(sub(path, key), "missing required field");
            return nullptr;
        }
        return &*it;
    }

    template <typename T>
    std::optional<T> number(const json& obj, const std::string& path, std::string_view key, bool required,
                            std::optional<T> min = std::nullopt) {
        const json* v = field(obj, path, key, required);
        if (v == nullptr) return std::nullopt;
        if (!v->is_number()) {
            fail(sub(path, key), "expected a number");
            return std::nullopt;
        }
        if constexpr (std::is_integral_v<T>) {
            if (!v->is_number_integer()) {
                fail(sub(path, key), "expected an integer");
                return std::nullopt;
            }
            if (std::is_unsigned_v<T> && v->is_number_integer() && !v->is_number_unsigned() &&
                v->get<std::int64_t>() < 0) {
                fail(sub(path, key), "must not be negative");
                return std::nullopt;
            }
        }
        T value = v->get<T>();
        if (min && value < *min) {
            fail(sub(path, key), "must be at least " + std::to_string(*min));
            return std::nullopt;
        }
        return value;
    }

    std::optional<std::string> string(const json& obj, const std::string& path, std::string_view key, bool required) {
        const json* v = field(obj, path, key, required);
        if (v == nullptr) return std::nullopt;
        if (!v->is_string()) {
            fail(sub(path, key), "expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<bool> boolean(const json& obj, const std::string& path, std::string_view key) {
        const json* v = field(obj, path, key, false);
        if (v == nullptr) return std::nullopt;
        if (!v->is_boolean()) {
            fail(sub(path, key), "expected true or false");
            return std::nullopt;
        }
        return v->get<bool>();
    }

    std::optional<double> probability(const json& obj, const std::string& path, std::string_view key) {
        auto p = number<double>(obj, path, key, false);
        if (p && (*p < 0.0 || *p > 1.0)) {
            fail(sub(path, key), "must lie in [0, 1]");
            return std::nullopt;
        }
        return p;
    }

    template <std::size_t N>
    std::optional<std::array<std::uint8_t, N>> hex(const json& obj, const std::string& path, std::string_view key,
                                                   bool required) {
        auto s = string(obj, path, key, required);
        if (!s) return std::nullopt;
        try {
            return from_hex<N>(*s);
        } catch (const std::exception& e) {
            fail(sub(path, key), e.what());
            return std::nullopt;
        }
    }

    std::optional<Imsi> imsi(const json& v, const std::string& path, std::size_t mnc_length) {
        if (!v.is_string()) {
            fail(path, "expected a 15-digit IMSI string");
            return std::nullopt;
        }
        try {
            return Imsi::parse(v.get<std::string>(), mnc_length);
        } catch (const std::exception& e) {
            fail(path, e.what());
            return std::nullopt;
        }
    }
};

std::string msin_digits(std::uint64_t value, std::size_t width) {
    std::string s = std::to_string(value);
    if (s.size() > width) throw std::out_of_range("MSIN counter overflowed");
    return std::string(width - s.size(), '0') + s;
}

ChangePolicy read_policy(Reader& r, const json& obj, const std::string& path) {
    ChangePolicy policy;
    r.allow_keys(obj, path, {"name", "n", "interval_ms"});
    auto name = r.string(obj, path, "name", true);
    if (!name) return policy;
    try {
        policy.kind = parse_policy_kind(*name);
    } catch (const std::exception& e) {
        r.fail(Reader::sub(path, "name"), e.what());
        return policy;
    }
    if (policy.kind == ChangePolicy::Kind::EveryNAuthentications)
        policy.n = r.number<std::uint32_t>(obj, path, "n", true, 1u).value_or(1);
    if (policy.kind == ChangePolicy::Kind::FixedInterval)
        policy.interval_ms = r.number<TimeMs>(obj, path, "interval_ms", true, TimeMs{1}).value_or(1);
    return policy;
}

MeConfig read_me(Reader& r, const json& obj, const std::string& path, MeConfig me = {}) {
    r.allow_keys(obj, path, {"proactive", "refresh", "restart_delay_mean_ms"});
    if (auto v = r.boolean(obj, path, "proactive")) me.proactive = *v;
    if (auto v = r.boolean(obj, path, "refresh")) me.refresh = *v;
    if (auto v = r.number<TimeMs>(obj, path, "restart_delay_mean_ms", false, TimeMs{0})) me.restart_delay_mean_ms = *v;
    return me;
}

/// Fields shared by explicit subscribers and generated populations.
void read_behaviour(Reader& r, const json& obj, const std::string& path, SubscriberConfig& s) {
    if (auto v = r.string(obj, path, "scheme", true)) {
        try {
            s.scheme = parse_scheme(*v);
        } catch (const std::exception& e) {
            r.fail(Reader::sub(path, "scheme"), e.what());
        }
    }
    if (auto v = r.string(obj, path, "selection", false)) {
        try {
            s.selection = parse_selection_mode(*v);
        } catch (const std::exception& e) {
            r.fail(Reader::sub(path, "selection"), e.what());
        }
    }
    if (auto v = r.number<std::uint32_t>(obj, path, "change_threshold", false)) s.change_threshold = *v;
    if (const json* p = r.field(obj, path, "policy", false)) s.policy = read_policy(r, *p, Reader::sub(path, "policy"));
    if (const json* m = r.field(obj, path, "me", false)) s.me = read_me(r, *m, Reader::sub(path, "me"));
    if (auto v = r.string(obj, path, "network", false)) s.initial_network = *v;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

void apply_override(json& doc, std::string_view path, const json& value) {
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        auto dot = path.find('.', start);
        std::string key(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
        if (key.empty()) throw std::invalid_argument("empty path component in override");
        json* next = nullptr;
        if (node->is_array()) {
            if (!is_digit_string(key)) throw std::invalid_argument("override path '" + std::string(path) +
                                                                   "': '" + key + "' is not an array index");
            std::size_t i = std::stoul(key);
            if (i >= node->size())
                throw std::invalid_argument("override path '" + std::string(path) + "': index " + key +
                                            " out of range");
            next = &(*node)[i];
        } else {
            if (!node->is_object() && !node->is_null())
                throw std::invalid_argument("override path '" + std::string(path) + "': '" + key +
                                            "' is inside a scalar");
            next = &(*node)[key];
        }
        if (dot == std::string_view::npos) {
            *next = value;
            return;
        }
        node = next;
        start = dot + 1;
    }
}

Scenario parse_scenario(const json& doc, std::optional<std::uint64_t> seed_override) {
    Reader r;
    Scenario sc;
    if (!doc.is_object()) throw ScenarioError({"(root): expected an object"});
    r.allow_keys(doc, "", {"format", "seed", "duration_ms", "operator", "networks", "subscribers", "population",
                           "imsi_pool", "workload", "air", "core", "policy_clock_ms", "attacks", "faults"});

    if (auto fmt = r.string(doc, "", "format", false); fmt && *fmt != "mimsi-scenario/1")
        r.fail("format", "unsupported format '" + *fmt + "'");
    sc.seed = r.number<std::uint64_t>(doc, "", "seed", true).value_or(0);
    if (seed_override) sc.seed = *seed_override;
    sc.duration_ms = r.number<TimeMs>(doc, "", "duration_ms", true, TimeMs{0}).value_or(0);
    if (auto v = r.number<TimeMs>(doc, "", "policy_clock_ms", false, TimeMs{1})) sc.policy_clock_ms = *v;

    std::size_t mnc_length = 2;
    if (const json* op = r.field(doc, "", "operator", true)) {
        r.allow_keys(*op, "operator", {"mcc", "mnc"});
        auto mcc = r.string(*op, "operator", "mcc", true);
        auto mnc = r.string(*op, "operator", "mnc", true);
        if (mcc && (mcc->size() != 3 || !is_digit_string(*mcc))) r.fail("operator.mcc", "expected 3 digits");
        if (mnc && ((mnc->size() != 2 && mnc->size() != 3) || !is_digit_string(*mnc)))
            r.fail("operator.mnc", "expected 2 or 3 digits");
        if (mcc && mnc) {
            sc.prefix = {*mcc, *mnc};
            mnc_length = mnc->size();
        }
    }
    const std::size_t msin_width = 12 - mnc_length;
    auto make_imsi = [&](std::uint64_t msin) { return sc.prefix.with_msin(msin_digits(msin, msin_width)); };

    if (const json* nets = r.field(doc, "", "networks", true)) {
        if (!nets->is_array() || nets->empty()) {
            r.fail("networks", "expected a non-empty array");
        } else {
            std::set<std::string> ids;
            for (std::size_t i = 0; i < nets->size(); ++i) {
                auto path = Reader::at("networks", i);
                const json& n = (*nets)[i];
                r.allow_keys(n, path, {"id", "batch_size"});
                NetworkConfig nc;
                nc.id = r.string(n, path, "id", true).value_or("");
                if (auto b = r.number<std::size_t>(n, path, "batch_size", false, std::size_t{1})) nc.batch_size = *b;
                if (!nc.id.empty() && !ids.insert(nc.id).second) r.fail(path + ".id", "duplicate network id");
                sc.networks.push_back(nc);
            }
        }
    }
    auto network_known = [&](const NetworkId& id) {
        return std::any_of(sc.networks.begin(), sc.networks.end(), [&](const auto& n) { return n.id == id; });
    };

    if (const json* subs = r.field(doc, "", "subscribers", false)) {
        if (!subs->is_array()) r.fail("subscribers", "expected an array");
        for (std::size_t i = 0; subs->is_array() && i < subs->size(); ++i) {
            auto path = Reader::at("subscribers", i);
            const json& s = (*subs)[i];
            r.allow_keys(s, path, {"account", "k", "opc", "op", "amf", "scheme", "imsi", "predefined", "selection",
                                   "selection_seed", "change_threshold", "policy", "me", "network"});
            SubscriberConfig sub;
            sub.account = r.string(s, path, "account", true).value_or("");
            if (auto k = r.hex<16>(s, path, "k", true)) sub.key.bytes = *k;
            bool has_opc = s.is_object() && s.contains("opc");
            bool has_op = s.is_object() && s.contains("op");
            if (has_opc == has_op) {
                r.fail(path, "exactly one of 'opc' or 'op' is required");
            } else if (has_opc) {
                if (auto v = r.hex<16>(s, path, "opc", true)) sub.opc = *v;
            } else if (auto v = r.hex<16>(s, path, "op", true)) {
                sub.opc = derive_opc(sub.key, *v);
            }
            if (auto v = r.hex<2>(s, path, "amf", false)) {
                sub.amf.value = static_cast<std::uint16_t>(((*v)[0] << 8) | (*v)[1]);
                if (sub.amf == kSmacAmf) r.fail(path + ".amf", "0xFFFF is reserved for sequence MACs");
            }
            read_behaviour(r, s, path, sub);
            if (const json* v = r.field(s, path, "imsi", true)) {
                if (auto imsi = r.imsi(*v, path + ".imsi", mnc_length)) sub.imsi = *imsi;
            }
            if (const json* list = r.field(s, path, "predefined", false)) {
                if (!list->is_array()) r.fail(path + ".predefined", "expected an array");
                for (std::size_t j = 0; list->is_array() && j < list->size(); ++j)
                    if (auto imsi = r.imsi((*list)[j], Reader::at(path + ".predefined", j), mnc_length))
                        sub.predefined.push_back(*imsi);
            }
            if (auto v = r.number<std::uint64_t>(s, path, "selection_seed", false)) sub.selection_seed = *v;
            sc.subscribers.push_back(std::move(sub));
        }
    }

    std::uint64_t next_msin = 0;
    if (const json* pop = r.field(doc, "", "population", false)) {
        const std::string path = "population";
        r.allow_keys(*pop, path, {"count", "scheme", "account_prefix", "msin_start", "predefined_count", "selection",
                                  "change_threshold", "policy", "me", "network", "refresh_fraction",
                                  "proactive_fraction"});
        auto count = r.number<std::size_t>(*pop, path, "count", true, std::size_t{1}).value_or(0);
        auto prefix = r.string(*pop, path, "account_prefix", false).value_or("sub");
        next_msin = r.number<std::uint64_t>(*pop, path, "msin_start", false).value_or(1);
        auto predefined_count = r.number<std::size_t>(*pop, path, "predefined_count", false, std::size_t{2}).value_or(4);
        auto refresh_fraction = r.probability(*pop, path, "refresh_fraction").value_or(1.0);
        auto proactive_fraction = r.probability(*pop, path, "proactive_fraction").value_or(1.0);
        SubscriberConfig base;
        read_behaviour(r, *pop, path, base);

        if (r.errors.empty() && !sc.prefix.mcc.empty()) {
            Rng rng = substream(sc.seed, "population");
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (std::size_t i = 0; i < count; ++i) {
                SubscriberConfig s = base;
                char name[32];
                std::snprintf(name, sizeof name, "%s-%04zu", prefix.c_str(), i + 1);
                s.account = name;
                fill_random(rng, s.key.bytes);
                fill_random(rng, s.opc);
                s.selection_seed = rng();
                s.me.proactive = unit(rng) < proactive_fraction;
                s.me.refresh = s.me.proactive && unit(rng) < refresh_fraction;
                try {
                    if (s.scheme == Scheme::C) {
                        s.imsi = make_imsi(next_msin++);
                    } else {
                        for (std::size_t j = 0; j < predefined_count; ++j) s.predefined.push_back(make_imsi(next_msin++));
                        s.imsi = s.predefined.front();
                    }
                } catch (const std::exception& e) {
                    r.fail(path + ".msin_start", e.what());
                    break;
                }
                sc.subscribers.push_back(std::move(s));
            }
        }
    }

    if (const json* pool = r.field(doc, "", "imsi_pool", false)) {
        if (pool->is_array()) {
            for (std::size_t j = 0; j < pool->size(); ++j)
                if (auto imsi = r.imsi((*pool)[j], Reader::at("imsi_pool", j), mnc_length)) sc.pool.push_back(*imsi);
        } else if (pool->is_object()) {
            r.allow_keys(*pool, "imsi_pool", {"msin_start", "count"});
            auto start = r.number<std::uint64_t>(*pool, "imsi_pool", "msin_start", false);
            auto count = r.number<std::size_t>(*pool, "imsi_pool", "count", true).value_or(0);
            std::uint64_t msin = start.value_or(next_msin + 1'000'000);
            try {
                for (std::size_t j = 0; j < count && !sc.prefix.mcc.empty(); ++j) sc.pool.push_back(make_imsi(msin++));
            } catch (const std::exception& e) {
                r.fail("imsi_pool.msin_start", e.what());
            }
        } else {
            r.fail("imsi_pool", "expected an array of IMSIs or {msin_start, count}");
        }
    }

    if (sc.subscribers.empty() && !doc.contains("subscribers") && !doc.contains("population"))
        r.fail("subscribers", "scenario needs 'subscribers' or 'population'");

    if (const json* w = r.field(doc, "", "workload", false)) {
        r.allow_keys(*w, "workload", {"calls_per_hour", "power_cycles_per_day", "off_duration_mean_ms",
                                      "roams_per_day", "identity_loss_probability"});
        auto& wl = sc.workload;
        wl.calls_per_hour = r.number<double>(*w, "workload", "calls_per_hour", false, 0.0).value_or(wl.calls_per_hour);
        wl.power_cycles_per_day =
            r.number<double>(*w, "workload", "power_cycles_per_day", false, 0.0).value_or(wl.power_cycles_per_day);
        wl.off_duration_mean_ms =
            r.number<TimeMs>(*w, "workload", "off_duration_mean_ms", false, TimeMs{0}).value_or(wl.off_duration_mean_ms);
        wl.roams_per_day = r.number<double>(*w, "workload", "roams_per_day", false, 0.0).value_or(wl.roams_per_day);
        wl.identity_loss_probability =
            r.probability(*w, "workload", "identity_loss_probability").value_or(wl.identity_loss_probability);
    }
    if (const json* a = r.field(doc, "", "air", false)) {
        r.allow_keys(*a, "air", {"delay_ms", "loss_probability", "duplicate_probability"});
        sc.air.delay_ms = r.number<TimeMs>(*a, "air", "delay_ms", false, TimeMs{0}).value_or(sc.air.delay_ms);
        sc.air.loss_probability = r.probability(*a, "air", "loss_probability").value_or(sc.air.loss_probability);
        sc.air.duplicate_probability =
            r.probability(*a, "air", "duplicate_probability").value_or(sc.air.duplicate_probability);
    }
    if (const json* c = r.field(doc, "", "core", false)) {
        r.allow_keys(*c, "core", {"min_delay_ms", "max_delay_ms", "duplicate_probability"});
        sc.core.min_delay_ms = r.number<TimeMs>(*c, "core", "min_delay_ms", false, TimeMs{0}).value_or(sc.core.min_delay_ms);
        sc.core.max_delay_ms = r.number<TimeMs>(*c, "core", "max_delay_ms", false, TimeMs{0}).value_or(sc.core.max_delay_ms);
        sc.core.duplicate_probability =
            r.probability(*c, "core", "duplicate_probability").value_or(sc.core.duplicate_probability);
        if (sc.core.max_delay_ms < sc.core.min_delay_ms) r.fail("core.max_delay_ms", "must be >= min_delay_ms");
    }

    if (const json* attacks = r.field(doc, "", "attacks", false)) {
        for (std::size_t i = 0; attacks->is_array() && i < attacks->size(); ++i) {
            auto path = Reader::at("attacks", i);
            const json& a = (*attacks)[i];
            r.allow_keys(a, path, {"kind", "at_ms", "network", "target", "count"});
            AttackConfig ac;
            auto kind = r.string(a, path, "kind", true).value_or("");
            if (kind == "catch") ac.kind = AttackConfig::Kind::Catch;
            else if (kind == "inject_random") ac.kind = AttackConfig::Kind::InjectRandom;
            else if (kind == "inject_replay") ac.kind = AttackConfig::Kind::InjectReplay;
            else if (!kind.empty()) r.fail(path + ".kind", "expected catch, inject_random or inject_replay");
            ac.at_ms = r.number<TimeMs>(a, path, "at_ms", true, TimeMs{0}).value_or(0);
            if (ac.kind == AttackConfig::Kind::Catch) {
                ac.network = r.string(a, path, "network", true).value_or("");
                if (!ac.network.empty() && !network_known(ac.network)) r.fail(path + ".network", "unknown network");
            }
            ac.target = r.string(a, path, "target", false);
            ac.count = r.number<std::uint32_t>(a, path, "count", false, 1u).value_or(1);
            sc.attacks.push_back(ac);
        }
        if (!attacks->is_array()) r.fail("attacks", "expected an array");
    }
    if (const json* faults = r.field(doc, "", "faults", false)) {
        for (std::size_t i = 0; faults->is_array() && i < faults->size(); ++i) {
            auto path = Reader::at("faults", i);
            const json& f = (*faults)[i];
            r.allow_keys(f, path, {"kind", "at_ms", "account"});
            FaultConfig fc;
            auto kind = r.string(f, path, "kind", true).value_or("");
            if (kind != "desync") r.fail(path + ".kind", "expected desync");
            fc.at_ms = r.number<TimeMs>(f, path, "at_ms", true, TimeMs{0}).value_or(0);
            fc.account = r.string(f, path, "account", true).value_or("");
            sc.faults.push_back(fc);
        }
        if (!faults->is_array()) r.fail("faults", "expected an array");
    }

    // Cross-field checks.
    std::set<std::string> accounts;
    std::set<Imsi> used;
    auto use = [&](const Imsi& imsi, const std::string& path) {
        if (!used.insert(imsi).second) r.fail(path, "IMSI " + std::string(imsi.digits()) + " is used twice");
        if (imsi.mcc() != sc.prefix.mcc || imsi.mnc() != sc.prefix.mnc)
            r.fail(path, "IMSI " + std::string(imsi.digits()) + " does not carry the operator prefix");
    };
    const std::size_t listed = doc.contains("subscribers") && doc["subscribers"].is_array() ? doc["subscribers"].size() : 0;
    for (std::size_t i = 0; i < sc.subscribers.size(); ++i) {
        auto& s = sc.subscribers[i];
        auto path = i < listed ? Reader::at("subscribers", i) : "population['" + s.account + "']";
        if (!s.account.empty() && !accounts.insert(s.account).second) r.fail(path, "duplicate account id");
        if (s.initial_network.empty() && !sc.networks.empty()) s.initial_network = sc.networks.front().id;
        if (!s.initial_network.empty() && !network_known(s.initial_network)) r.fail(path + ".network", "unknown network");
        if (s.scheme == Scheme::C) {
            if (!s.predefined.empty()) r.fail(path + ".predefined", "scheme C takes no predefined list");
            if (s.imsi) use(*s.imsi, path + ".imsi");
        } else {
            if (s.predefined.size() < 2) r.fail(path + ".predefined", "schemes A and B need at least 2 IMSIs");
            if (s.imsi && std::find(s.predefined.begin(), s.predefined.end(), *s.imsi) == s.predefined.end())
                r.fail(path + ".imsi", "must be one of the predefined IMSIs");
            for (std::size_t j = 0; j < s.predefined.size(); ++j) use(s.predefined[j], Reader::at(path + ".predefined", j));
        }
        if (s.scheme == Scheme::A && s.policy.kind != ChangePolicy::Kind::Manual)
            r.fail(path + ".policy", "scheme A changes are card-initiated; use the manual policy");
        if (s.scheme != Scheme::A && s.change_threshold != 0)
            r.fail(path + ".change_threshold", "only scheme A cards use a change threshold");
    }
    for (std::size_t j = 0; j < sc.pool.size(); ++j) use(sc.pool[j], Reader::at("imsi_pool", j));
    for (std::size_t i = 0; i < sc.attacks.size(); ++i)
        if (sc.attacks[i].target && !accounts.contains(*sc.attacks[i].target))
            r.fail(Reader::at("attacks", i) + ".target", "unknown account");
    for (std::size_t i = 0; i < sc.faults.size(); ++i)
        if (!accounts.contains(sc.faults[i].account)) r.fail(Reader::at("faults", i) + ".account", "unknown account");

    if (!r.errors.empty()) throw ScenarioError(std::move(r.errors));
    return sc;
}

}  // namespace mimsi
