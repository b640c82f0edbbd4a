#include "explorer.hpp"

#include <array>
#include <deque>
#include <map>

#include "home_network.hpp"
#include "usim.hpp"

namespace mimsi {

std::string_view to_string(Step step) {
    switch (step) {
        case Step::Trigger: return "trigger";
        case Step::Request: return "request";
        case Step::Deliver: return "deliver";
        case Step::Drop: return "drop";
        case Step::Refresh: return "refresh";
        case Step::PowerCycle: return "power_cycle";
        case Step::Replay: return "replay";
    }
    return "?";
}

Fields ExploreVerdict::to_json() const {
    return {{"name", name},         {"nodes", nodes},           {"leaves", leaves},
            {"dead_ends", dead_ends}, {"violations", violations}, {"ok", ok}};
}

namespace {

constexpr std::size_t kStepKinds = 7;
const AccountId kAccount = "skeleton";

struct State {
    HomeNetwork hn;
    Usim usim;
    Imsi presented;
    std::deque<AuthVector> buffer;
    std::optional<Imsi> buffer_imsi;
    std::optional<AuthVector> last_delivered;
    std::size_t triggers = 0;
    std::size_t promotions = 0;
};

State initial_state(const Skeleton& sk) {
    OperatorPrefix prefix{"001", "01"};
    auto imsi = [&](int n) { return prefix.with_msin("00000000" + std::to_string(10 + n)); };
    SubscriberKey key{from_hex<16>("465b5ce8b199b49faa5f0a2ee238a6bc")};
    Block128 opc = from_hex<16>("cd63cb71954a9f4e48a5994e37a02baf");

    HomeNetwork hn(substream(1, "explorer"), prefix);
    std::vector<Imsi> predefined;
    Imsi first = imsi(0);
    if (sk.scheme == Scheme::C) {
        for (std::size_t i = 0; i < sk.pool; ++i) hn.add_free_imsi(imsi(static_cast<int>(50 + i)));
    } else {
        for (std::size_t i = 0; i < sk.predefined; ++i) predefined.push_back(imsi(static_cast<int>(i)));
    }
    hn.provision({kAccount, key, opc, kNormalAmf, Sqn{}, sk.scheme, first, predefined}, 0);
    Usim usim({key, opc, Sqn{}, sk.scheme, first, predefined, SelectionMode::Cyclic, 0, sk.change_threshold, prefix});
    usim.terminal_profile({true, true});
    return State{std::move(hn), std::move(usim), first, {}, {}, {}, 0, 0};
}

/// Applies one step. Returns false when the step is not admissible here.
bool apply(State& s, Step step, const Skeleton& sk, std::vector<std::string>& problems) {
    switch (step) {
        case Step::Trigger:
            if (sk.scheme == Scheme::A) return false;
            s.hn.trigger_change(kAccount, 0);
            ++s.triggers;
            return true;
        case Step::Request: {
            if (s.buffer_imsi != s.presented) {
                s.buffer.clear();
                s.buffer_imsi = s.presented;
            }
            try {
                auto batch = s.hn.request_vectors(s.presented, sk.batch_size, 0);
                if (batch.promotion) ++s.promotions;
                for (auto& v : batch.vectors) s.buffer.push_back(std::move(v));
            } catch (const HomeNetworkError& e) {
                problems.push_back(std::string("reachability: request refused: ") + e.what());
            }
            return true;
        }
        case Step::Deliver: {
            if (s.buffer.empty()) return false;
            AuthVector v = std::move(s.buffer.front());
            s.buffer.pop_front();
            auto r = s.usim.handle_auth_request(v.rand, v.autn);
            if (std::holds_alternative<MacFailure>(r.outcome)) problems.push_back("aka: genuine vector failed MAC");
            s.last_delivered = std::move(v);
            return true;
        }
        case Step::Drop:
            if (s.buffer.empty()) return false;
            s.buffer.pop_front();
            return true;
        case Step::Refresh:
            if (!s.usim.pending_refresh()) return false;
            s.usim.fetch();
            s.usim.terminal_response();
            s.presented = s.usim.read_ef_imsi();
            return true;
        case Step::PowerCycle:
            s.usim.power_cycle();
            s.usim.terminal_profile({true, true});
            s.presented = s.usim.read_ef_imsi();
            return true;
        case Step::Replay: {
            if (!s.last_delivered) return false;
            auto before = s.usim.read_ef_imsi();
            auto r = s.usim.handle_auth_request(s.last_delivered->rand, s.last_delivered->autn);
            if (!std::holds_alternative<SqnStale>(r.outcome)) problems.push_back("replay: replayed challenge not stale");
            if (s.usim.read_ef_imsi() != before) problems.push_back("replay: replay changed EF_IMSI");
            return true;
        }
    }
    return false;
}

void check(const State& s, const Skeleton& sk, std::vector<std::string>& problems) {
    for (auto& p : s.hn.check_invariants()) problems.push_back(std::move(p));
    auto resolves = [&](const Imsi& imsi) {
        auto a = s.hn.find_account(imsi);
        return a && *a == kAccount;
    };
    if (!resolves(s.usim.read_ef_imsi()))
        problems.push_back("reachability: EF_IMSI " + std::string(s.usim.read_ef_imsi().digits()) + " unresolvable");
    if (!resolves(s.presented))
        problems.push_back("reachability: presented " + std::string(s.presented.digits()) + " unresolvable");
    if (sk.scheme == Scheme::C) {
        const auto& rec = s.hn.record(kAccount);
        if (rec.history.size() != 1 + s.promotions) problems.push_back("history: appends differ from promotions");
        if (s.promotions > s.triggers) problems.push_back("promotion: more promotions than changes");
        if (s.promotions > s.usim.change_count()) problems.push_back("promotion: promoted before the card changed");
    }
}

struct Explorer {
    const Skeleton& sk;
    std::uint64_t limit;
    ExploreVerdict verdict;
    std::vector<Step> path;

    void fail(const std::vector<std::string>& problems) {
        if (problems.empty() || verdict.violations.size() >= 20) return;
        std::string where;
        for (auto st : path) where += std::string(where.empty() ? "" : ",") + std::string(to_string(st));
        verdict.violations.push_back(problems.front() + " after [" + where + "]");
    }

    void dfs(const State& s, std::array<std::size_t, kStepKinds>& remaining, std::size_t left) {
        if (++verdict.nodes > limit) throw StateSpaceExceeded("skeleton " + sk.name + " exceeds the node bound");
        if (left == 0) {
            ++verdict.leaves;
            return;
        }
        bool any = false;
        for (std::size_t k = 0; k < kStepKinds; ++k) {
            if (remaining[k] == 0) continue;
            State next = s;
            std::vector<std::string> problems;
            if (!apply(next, static_cast<Step>(k), sk, problems)) continue;
            any = true;
            path.push_back(static_cast<Step>(k));
            check(next, sk, problems);
            fail(problems);
            --remaining[k];
            dfs(next, remaining, left - 1);
            ++remaining[k];
            path.pop_back();
        }
        if (!any) {
            ++verdict.leaves;
            ++verdict.dead_ends;
        }
    }
};

}  // namespace

ExploreVerdict exhaustive_small_run(const Skeleton& skeleton, std::uint64_t node_limit) {
    if (skeleton.steps.size() > kMaxSkeletonSteps)
        throw StateSpaceExceeded("skeleton " + skeleton.name + " has more than " +
                                 std::to_string(kMaxSkeletonSteps) + " steps");
    std::array<std::size_t, kStepKinds> remaining{};
    for (auto st : skeleton.steps) ++remaining[static_cast<std::size_t>(st)];

    Explorer ex{skeleton, node_limit, {}, {}};
    ex.verdict.name = skeleton.name;
    State root = initial_state(skeleton);
    std::vector<std::string> problems;
    check(root, skeleton, problems);
    ex.fail(problems);
    ex.dfs(root, remaining, skeleton.steps.size());
    ex.verdict.ok = ex.verdict.violations.empty();
    return ex.verdict;
}

std::vector<Skeleton> standard_skeletons() {
    using S = Step;
    std::vector<Skeleton> out;
    out.push_back({"scheme-c-single-change", Scheme::C,
                   {S::Trigger, S::Request, S::Deliver, S::Refresh, S::Request, S::Deliver}});
    out.push_back({"scheme-c-power-cycle", Scheme::C,
                   {S::Trigger, S::Request, S::Deliver, S::PowerCycle, S::Request, S::Deliver, S::Replay}});
    out.push_back({"scheme-c-duplicate-delivery", Scheme::C,
                   {S::Trigger, S::Request, S::Deliver, S::Deliver, S::Deliver, S::Refresh, S::Request, S::Deliver,
                    S::Replay},
                   3});
    out.push_back({"scheme-c-lost-signal", Scheme::C,
                   {S::Trigger, S::Request, S::Drop, S::Deliver, S::Refresh, S::Request, S::Deliver, S::PowerCycle}});
    out.push_back({"scheme-b-lost-signal", Scheme::B,
                   {S::Trigger, S::Request, S::Drop, S::Deliver, S::Refresh, S::PowerCycle, S::Request, S::Deliver,
                    S::Replay}});
    out.push_back({"scheme-b-two-changes", Scheme::B,
                   {S::Trigger, S::Request, S::Deliver, S::Refresh, S::Trigger, S::Request, S::Deliver, S::PowerCycle}});
    out.push_back({"scheme-a-threshold-1", Scheme::A,
                   {S::Request, S::Deliver, S::Deliver, S::Refresh, S::Request, S::Deliver, S::PowerCycle, S::Replay},
                   2, 1});
    out.push_back({"scheme-a-threshold-2", Scheme::A,
                   {S::Request, S::Deliver, S::Deliver, S::Deliver, S::Drop, S::Refresh, S::Request, S::Deliver,
                    S::PowerCycle},
                   3, 2});
    return out;
}

}  // namespace mimsi
