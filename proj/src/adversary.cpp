#include "adversary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <set>
#include <unordered_map>

namespace mimsi {

std::vector<Observation> passive_collect(const std::vector<TraceEvent>& trace) {
    std::vector<Observation> out;
    for (const auto& e : trace) {
        if (!e.is_visible("network")) continue;
        for (std::string_view field : {"imsi", "tmsi"}) {
            if (!e.is_visible(field)) continue;
            Observation o;
            o.time = e.time;
            o.seq = e.seq;
            o.location = e.fields.at("network").get<std::string>();
            o.message = e.is_visible("message") ? e.fields.at("message").get<std::string>() : std::string();
            o.identity = std::string(field) + ":" + e.fields.at(std::string(field)).get<std::string>();
            o.attacker_caused = e.is_visible("attacker") && e.fields.at("attacker").get<bool>();
            out.push_back(std::move(o));
        }
    }
    return out;
}

GroundTruth ground_truth(const std::vector<TraceEvent>& trace) {
    GroundTruth truth;
    for (const auto& e : trace)
        if (e.truth) truth.emplace(e.seq, *e.truth);
    return truth;
}

Fields LinkabilityReport::to_json() const {
    Fields j;
    j["mean_pseudonyms"] = mean_pseudonyms;
    j["linkage_violations"] = linkage_violations;
    Fields subs = Fields::object();
    for (const auto& [account, s] : subscribers) {
        Fields e = Fields::array();
        for (const auto& ep : s.epochs)
            e.push_back({{"identity", ep.identity},
                         {"first_seen", ep.first_seen},
                         {"last_seen", ep.last_seen},
                         {"observations", ep.observations}});
        subs[account] = {{"pseudonyms", s.pseudonym_count},
                         {"max_epoch_ms", s.max_epoch_ms},
                         {"linkage_violations", s.linkage_violations},
                         {"epochs", e}};
    }
    j["subscribers"] = subs;
    return j;
}

LinkabilityReport linkability_analyze(const std::vector<Observation>& observations, const GroundTruth& truth,
                                      const std::vector<AccountId>& accounts) {
    LinkabilityReport report;
    for (const auto& a : accounts) report.subscribers[a];

    struct Cursor {
        std::set<std::string> previous_tmsis;
        std::set<std::string> current_tmsis;
    };
    std::map<AccountId, Cursor> cursors;

    for (const auto& o : observations) {
        auto t = truth.find(o.seq);
        if (t == truth.end()) continue;
        auto& sub = report.subscribers[t->second];
        auto& cur = cursors[t->second];
        if (o.is_imsi()) {
            if (sub.epochs.empty() || sub.epochs.back().identity != o.identity) {
                sub.epochs.push_back({o.identity, o.time, o.time, 0});
                cur.previous_tmsis = std::move(cur.current_tmsis);
                cur.current_tmsis.clear();
            }
        } else {
            if (sub.epochs.empty()) continue;
            if (cur.previous_tmsis.contains(o.identity)) ++sub.linkage_violations;
            cur.current_tmsis.insert(o.identity);
        }
        auto& ep = sub.epochs.back();
        ep.last_seen = o.time;
        ++ep.observations;
    }

    double total = 0.0;
    for (auto& [_, sub] : report.subscribers) {
        sub.pseudonym_count = sub.epochs.size();
        for (const auto& ep : sub.epochs) sub.max_epoch_ms = std::max(sub.max_epoch_ms, ep.last_seen - ep.first_seen);
        report.linkage_violations += sub.linkage_violations;
        total += static_cast<double>(sub.pseudonym_count);
    }
    if (!report.subscribers.empty()) report.mean_pseudonyms = total / static_cast<double>(report.subscribers.size());
    return report;
}

std::vector<std::uint32_t> active_catch(ServingNetwork& sn) {
    auto tmsis = sn.tmsis();
    for (auto t : tmsis) sn.simulate_identity_loss(t);
    return tmsis;
}

air::AuthRequest random_auth_request(Rng& rng) {
    air::AuthRequest req;
    fill_random(rng, req.rand);
    std::array<std::uint8_t, 16> autn{};
    fill_random(rng, autn);
    req.autn = Autn::from_bytes(autn);
    return req;
}

void InjectionTally::record(const CardAuthResult& r) {
    ++attempts;
    if (std::holds_alternative<Accepted>(r.outcome)) ++accepted;
    else if (std::holds_alternative<MacFailure>(r.outcome)) ++mac_failures;
    else ++sqn_stale;
    if (r.change) ++imsi_changes;
}

Fields InjectionTally::to_json() const {
    return {{"attempts", attempts},
            {"accepted", accepted},
            {"mac_failures", mac_failures},
            {"sqn_stale", sqn_stale},
            {"imsi_changes", imsi_changes}};
}

CardAuthResult inject_rand(Usim& usim, const Block128& rand, const Autn& autn) {
    return usim.handle_auth_request(rand, autn);
}

namespace {

struct Sample {
    const Block128* rand;
    bool signal;
};

using Predictor = std::function<bool(const Block128&)>;

Predictor train_bits(const std::vector<Sample>& train) {
    std::array<std::array<double, 128>, 2> ones{};
    std::array<double, 2> n{};
    for (const auto& s : train) {
        n[s.signal] += 1;
        for (int b = 0; b < 128; ++b) ones[s.signal][b] += ((*s.rand)[b / 8] >> (7 - b % 8)) & 1;
    }
    std::array<std::array<double, 128>, 2> l1{}, l0{};
    for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 128; ++b) {
            double p = (ones[c][b] + 1) / (n[c] + 2);
            l1[c][b] = std::log(p);
            l0[c][b] = std::log(1 - p);
        }
    double prior = std::log((n[1] + 1) / (n[0] + 1));
    return [=](const Block128& r) {
        double score = prior;
        for (int b = 0; b < 128; ++b) {
            bool bit = (r[b / 8] >> (7 - b % 8)) & 1;
            score += bit ? l1[1][b] - l1[0][b] : l0[1][b] - l0[0][b];
        }
        return score > 0;
    };
}

Predictor train_bytes(const std::vector<Sample>& train) {
    auto counts = std::make_shared<std::array<std::array<std::array<double, 256>, 16>, 2>>();
    std::array<double, 2> n{};
    for (const auto& s : train) {
        n[s.signal] += 1;
        for (int i = 0; i < 16; ++i) (*counts)[s.signal][i][(*s.rand)[i]] += 1;
    }
    for (int c = 0; c < 2; ++c)
        for (auto& pos : (*counts)[c])
            for (auto& v : pos) v = std::log((v + 1) / (n[c] + 256));
    double prior = std::log((n[1] + 1) / (n[0] + 1));
    return [counts, prior](const Block128& r) {
        double score = prior;
        for (int i = 0; i < 16; ++i) score += (*counts)[1][i][r[i]] - (*counts)[0][i][r[i]];
        return score > 0;
    };
}

/// Looks for leading bytes that recur within one class more than the other.
Predictor train_prefix(const std::vector<Sample>& train) {
    auto table = std::make_shared<std::unordered_map<std::uint16_t, std::array<std::uint32_t, 2>>>();
    std::array<double, 2> n{};
    for (const auto& s : train) {
        n[s.signal] += 1;
        std::uint16_t key = static_cast<std::uint16_t>(((*s.rand)[0] << 8) | (*s.rand)[1]);
        (*table)[key][s.signal] += 1;
    }
    bool majority = n[1] > n[0];
    return [table, majority](const Block128& r) {
        std::uint16_t key = static_cast<std::uint16_t>((r[0] << 8) | r[1]);
        auto it = table->find(key);
        if (it == table->end() || it->second[0] == it->second[1]) return majority;
        return it->second[1] > it->second[0];
    };
}

double accuracy(const Predictor& p, const std::vector<Sample>& test) {
    std::size_t correct = 0;
    for (const auto& s : test) correct += p(*s.rand) == s.signal;
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<ClassifierScore> score_all(const std::vector<Sample>& train, const std::vector<Sample>& test) {
    return {{"per_bit_naive_bayes", accuracy(train_bits(train), test)},
            {"byte_frequency", accuracy(train_bytes(train), test)},
            {"repeated_prefix", accuracy(train_prefix(train), test)}};
}

double best_of(const std::vector<ClassifierScore>& scores) {
    double best = 0.0;
    for (const auto& s : scores) best = std::max(best, s.accuracy);
    return best;
}

}  // namespace

Fields DistinguishabilityResult::to_json() const {
    Fields c = Fields::object();
    for (const auto& s : classifiers) c[s.name] = s.accuracy;
    return {{"classifiers", c},           {"best", best},
            {"best_accuracy", best_accuracy}, {"sigma", sigma},
            {"permutation_p", permutation_p}, {"train_size", train_size},
            {"test_size", test_size},       {"pass", pass}};
}

DistinguishabilityResult rand_distinguishability(const std::vector<Block128>& signal,
                                                 const std::vector<Block128>& plain, Rng& rng,
                                                 std::size_t permutations) {
    std::vector<Sample> all;
    all.reserve(signal.size() + plain.size());
    for (const auto& r : signal) all.push_back({&r, true});
    for (const auto& r : plain) all.push_back({&r, false});
    if (all.size() < 4) throw std::invalid_argument("corpus too small");
    std::shuffle(all.begin(), all.end(), rng);

    const std::size_t half = all.size() / 2;
    std::vector<Sample> train(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<Sample> test(all.begin() + static_cast<std::ptrdiff_t>(half), all.end());

    DistinguishabilityResult result;
    result.train_size = train.size();
    result.test_size = test.size();
    result.classifiers = score_all(train, test);
    for (const auto& s : result.classifiers)
        if (s.accuracy > result.best_accuracy) {
            result.best_accuracy = s.accuracy;
            result.best = s.name;
        }
    result.sigma = std::sqrt(0.25 / static_cast<double>(test.size()));

    std::vector<bool> labels;
    labels.reserve(all.size());
    for (const auto& s : all) labels.push_back(s.signal);
    std::size_t at_least = 0;
    for (std::size_t k = 0; k < permutations; ++k) {
        std::shuffle(labels.begin(), labels.end(), rng);
        std::vector<Sample> ptrain(train), ptest(test);
        for (std::size_t i = 0; i < ptrain.size(); ++i) ptrain[i].signal = labels[i];
        for (std::size_t i = 0; i < ptest.size(); ++i) ptest[i].signal = labels[half + i];
        if (best_of(score_all(ptrain, ptest)) >= result.best_accuracy) ++at_least;
    }
    result.permutation_p = static_cast<double>(1 + at_least) / static_cast<double>(1 + permutations);
    result.pass = std::abs(result.best_accuracy - 0.5) <= 3.0 * result.sigma;
    return result;
}

}  // namespace mimsi
