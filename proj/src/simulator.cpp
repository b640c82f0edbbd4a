#include "simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace mimsi {

namespace {

constexpr double kMsPerHour = 3'600'000.0;
constexpr double kMsPerDay = 86'400'000.0;
constexpr std::size_t kReplayMemory = 32;

struct Envelope {
    AirMessage message;
    std::size_t ue = 0;
    NetworkId network;
    bool uplink = true;
    std::uint64_t txn = 0;
    bool attacker = false;
    std::optional<RandKind> kind;  // ground truth for AuthRequest
};

struct PowerOn {
    std::size_t ue;
};
struct PowerOff {
    std::size_t ue;
    std::uint64_t generation;
};
struct Call {
    std::size_t ue;
};
struct Roam {
    std::size_t ue;
};
struct UserRestart {
    std::size_t ue;
};
struct PolicyClock {};
struct Deliver {
    Envelope env;
};
struct VectorsArrive {
    NetworkId network;
    Imsi imsi;
    std::vector<AuthVector> vectors;
    bool duplicate = false;
};
struct AttackAt {
    std::size_t index;
};
struct FaultAt {
    FaultConfig fault;
};

using Action = std::variant<PowerOn, PowerOff, Call, Roam, UserRestart, PolicyClock, Deliver, VectorsArrive,
                            AttackAt, FaultAt>;

struct Scheduled {
    TimeMs time;
    std::uint64_t seq;
    Action action;
};

struct Later {
    bool operator()(const Scheduled& a, const Scheduled& b) const {
        return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
};

struct Ue {
    const SubscriberConfig* cfg;
    Usim usim;
    MeState me;
    Rng rng;
    Rng air_rng;
    NetworkId network;
    std::uint64_t txn = 0;
    std::uint64_t power_generation = 0;
    std::optional<Imsi> awaiting_effect;
    TimeMs effect_decision = 0;
    std::vector<air::AuthRequest> accepted;
};

struct Session {
    enum class Stage { Idle, Identity, Vectors, Auth };
    std::uint64_t txn = 0;
    std::optional<Imsi> imsi;
    Stage stage = Stage::Idle;
    bool retried = false;
};

struct Network {
    ServingNetwork sn;
    Rng rng;
    Rng core_rng;
    std::map<std::size_t, Session> sessions;
    std::set<Imsi> outstanding;
    std::set<std::uint32_t> caught;
};

std::string tmsi_hex(std::uint32_t value) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", value);
    return buf;
}

std::string_view signal_name(const SignalResult& s) {
    if (std::holds_alternative<ChangeB>(s)) return "change_b";
    if (std::holds_alternative<ChangeC>(s)) return "change_c";
    return std::get<NoSignal>(s).decode_failed ? "decode_failed" : "none";
}

std::string_view failure_cause(air::AuthFailure::Cause c) {
    return c == air::AuthFailure::Cause::MacFailure ? "mac_failure" : "synch_failure";
}

class Simulation {
public:
    Simulation(const Scenario& sc, const RunOptions& opt)
        : sc_(sc), trace_(opt.debug_keys), hn_(substream(sc.seed, "hn"), sc.prefix),
          adversary_rng_(substream(sc.seed, "adversary")) {
        for (const auto& imsi : sc.pool) hn_.add_free_imsi(imsi);
        for (const auto& n : sc.networks) {
            auto key = substream(sc.seed, "tmsi:" + n.id)();
            networks_.emplace(n.id, Network{ServingNetwork(n.id, n.batch_size, key), substream(sc.seed, "sn:" + n.id),
                                            substream(sc.seed, "core:" + n.id), {}, {}, {}});
        }
        ues_.reserve(sc.subscribers.size());
        for (const auto& s : sc.subscribers) {
            hn_.provision({s.account, s.key, s.opc, s.amf, Sqn{}, s.scheme, *s.imsi, s.predefined}, 0);
            UsimPersonalization p{s.key,      s.opc,           Sqn{},   s.scheme, *s.imsi, s.predefined,
                                  s.selection, s.selection_seed, s.change_threshold, sc.prefix};
            Ue ue{&s, Usim(p), MeState{}, substream(sc.seed, "ue:" + s.account),
                  substream(sc.seed, "air:" + s.account), s.initial_network};
            ue.me.proactive_support = s.me.proactive;
            ue.me.refresh_capable = s.me.refresh;
            me_camp(ue.me, s.initial_network);
            account_index_.emplace(s.account, ues_.size());
            ues_.push_back(std::move(ue));
            policy_.configure(s.account, s.policy, 0);
            if (s.scheme == Scheme::C) flags_[s.account] = false;
        }
        faults_ = sc.faults;
        if (opt.fault) {
            if (*opt.fault != "desync") throw std::invalid_argument("unknown fault '" + *opt.fault + "'");
            if (!sc.subscribers.empty())
                faults_.push_back({FaultConfig::Kind::Desync, sc.duration_ms / 2, sc.subscribers.front().account});
        }
    }

    RunResult run(const std::string& hash) {
        if (sc_.duration_ms > 0) seed_schedule();
        while (!queue_.empty() && !violation_) {
            std::pop_heap(queue_.begin(), queue_.end(), Later{});
            Scheduled next = std::move(queue_.back());
            queue_.pop_back();
            if (next.time >= sc_.duration_ms) {
                queue_.push_back(std::move(next));
                std::push_heap(queue_.begin(), queue_.end(), Later{});
                break;
            }
            now_ = next.time;
            ++stats_.scheduler_events;
            promoted_this_event_.clear();
            std::visit([this](auto& a) { handle(a); }, next.action);
            check();
        }
        return finish(hash);
    }

private:
    // --- scheduling ------------------------------------------------------

    void schedule(TimeMs at, Action action) {
        queue_.push_back({at, next_seq_++, std::move(action)});
        std::push_heap(queue_.begin(), queue_.end(), Later{});
    }

    static TimeMs exp_delay(Rng& rng, double mean_ms) {
        std::exponential_distribution<double> d(1.0 / mean_ms);
        return std::max<TimeMs>(1, static_cast<TimeMs>(std::llround(d(rng))));
    }

    void schedule_call(std::size_t i) {
        if (sc_.workload.calls_per_hour <= 0) return;
        schedule(now_ + exp_delay(ues_[i].rng, kMsPerHour / sc_.workload.calls_per_hour), Call{i});
    }
    void schedule_roam(std::size_t i) {
        if (sc_.workload.roams_per_day <= 0 || sc_.networks.size() < 2) return;
        schedule(now_ + exp_delay(ues_[i].rng, kMsPerDay / sc_.workload.roams_per_day), Roam{i});
    }
    void schedule_power_off(std::size_t i) {
        if (sc_.workload.power_cycles_per_day <= 0) return;
        auto& ue = ues_[i];
        schedule(now_ + exp_delay(ue.rng, kMsPerDay / sc_.workload.power_cycles_per_day),
                 PowerOff{i, ++ue.power_generation});
    }

    void seed_schedule() {
        for (std::size_t i = 0; i < ues_.size(); ++i) {
            std::uniform_int_distribution<TimeMs> jitter(0, 999);
            now_ = 0;
            schedule(jitter(ues_[i].rng), PowerOn{i});
            schedule_call(i);
            schedule_roam(i);
        }
        bool clocked = std::any_of(sc_.subscribers.begin(), sc_.subscribers.end(), [](const auto& s) {
            return s.policy.kind == ChangePolicy::Kind::FixedInterval;
        });
        if (clocked) schedule(sc_.policy_clock_ms, PolicyClock{});
        for (std::size_t i = 0; i < sc_.attacks.size(); ++i) schedule(sc_.attacks[i].at_ms, AttackAt{i});
        for (const auto& f : faults_) schedule(f.at_ms, FaultAt{f});
        now_ = 0;
    }

    // --- trace helpers ---------------------------------------------------

    std::string ue_actor(std::size_t i) const { return "ue:" + ues_[i].cfg->account; }
    const AccountId& account(std::size_t i) const { return ues_[i].cfg->account; }

    void send(Envelope env) {
        auto& ue = ues_[env.ue];
        Fields f;
        f["from"] = env.uplink ? ue_actor(env.ue) : "sn:" + env.network;
        f["to"] = env.uplink ? "sn:" + env.network : ue_actor(env.ue);
        f["network"] = env.network;
        f["message"] = message_name(env.message);
        f["txn"] = env.txn;
        std::vector<std::string> visible{"network", "message"};
        std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, air::AttachWithImsi> || std::is_same_v<T, air::IdentityResponse>) {
                    f["imsi"] = std::string(m.imsi.digits());
                    visible.push_back("imsi");
                } else if constexpr (std::is_same_v<T, air::AttachWithTmsi>) {
                    f["tmsi"] = tmsi_hex(m.tmsi.value);
                    visible.push_back("tmsi");
                } else if constexpr (std::is_same_v<T, air::AuthRequest>) {
                    f["rand"] = to_hex(m.rand);
                    f["autn"] = to_hex(m.autn.to_bytes());
                    visible.insert(visible.end(), {"rand", "autn"});
                } else if constexpr (std::is_same_v<T, air::AuthResponse>) {
                    f["res"] = to_hex(m.res);
                    visible.push_back("res");
                } else if constexpr (std::is_same_v<T, air::AuthFailure>) {
                    f["cause"] = failure_cause(m.cause);
                    visible.push_back("cause");
                } else if constexpr (std::is_same_v<T, air::Reject>) {
                    f["cause"] = to_string(m.cause);
                    visible.push_back("cause");
                } else if constexpr (std::is_same_v<T, air::TmsiReallocate>) {
                    f["tmsi"] = tmsi_hex(m.tmsi.value);  // ciphered after AKA
                }
            },
            env.message);
        if (env.attacker) {
            f["attacker"] = true;
            visible.push_back("attacker");
        }
        trace_.emit(now_, env.uplink ? ue_actor(env.ue) : "sn:" + env.network, "air", std::move(f),
                    std::move(visible), account(env.ue));

        if (std::holds_alternative<air::AuthRequest>(env.message)) ++stats_.auth_requests;
        if (env.uplink && ue.awaiting_effect) {
            if (auto imsi = cleartext_imsi(env.message); imsi && *imsi == *ue.awaiting_effect) {
                stats_.effect_latency_ms.push_back(static_cast<double>(now_ - ue.effect_decision));
                ue.awaiting_effect.reset();
            }
        }

        std::bernoulli_distribution lost(sc_.air.loss_probability);
        if (lost(ue.air_rng)) {
            drop(env, "lost");
            return;
        }
        std::bernoulli_distribution dup(sc_.air.duplicate_probability);
        if (dup(ue.air_rng)) {
            if (std::holds_alternative<air::AuthRequest>(env.message)) ++stats_.auth_requests;
            ++stats_.air_duplicates;
            trace_.emit(now_, env.uplink ? ue_actor(env.ue) : "sn:" + env.network, "air_duplicate",
                        Fields{{"message", message_name(env.message)}, {"txn", env.txn}}, {}, account(env.ue));
            schedule(now_ + sc_.air.delay_ms + 1 + sc_.air.delay_ms / 2, Deliver{env});
        }
        schedule(now_ + sc_.air.delay_ms, Deliver{std::move(env)});
    }

    void drop(const Envelope& env, std::string_view reason) {
        ++stats_.air_drops;
        if (std::holds_alternative<air::AuthRequest>(env.message)) ++stats_.auth_request_drops;
        Fields f{{"message", message_name(env.message)}, {"reason", reason}, {"txn", env.txn}};
        trace_.emit(now_, env.uplink ? "sn:" + env.network : ue_actor(env.ue), "air_drop", std::move(f), {},
                    account(env.ue));
    }

    void send_down(std::size_t ue, const NetworkId& network, AirMessage m, std::uint64_t txn, bool attacker = false,
                   std::optional<RandKind> kind = std::nullopt) {
        send({std::move(m), ue, network, false, txn, attacker, kind});
    }

    void start_transaction(std::size_t i, AirMessage attach) {
        auto& ue = ues_[i];
        ++ue.txn;
        send({std::move(attach), i, ue.network, true, ue.txn});
    }

    // --- home network ----------------------------------------------------

    void policy_tick(const PolicyEvent& event) {
        for (const auto& acct : policy_.tick(event)) trigger(acct);
    }

    void trigger(const AccountId& acct) {
        Fields f{{"account", acct}};
        try {
            auto r = hn_.trigger_change(acct, now_);
            f["already_pending"] = r.already_pending;
            if (r.allocated) f["allocated"] = std::string(r.allocated->digits());
            if (!r.already_pending) {
                ++stats_.changes_decided;
                decisions_.emplace(acct, now_);
            }
            trace_.emit(now_, "hn", "hn_trigger", std::move(f), {}, acct);
        } catch (const HomeNetworkError& e) {
            f["error"] = e.what();
            trace_.emit(now_, "hn", "hn_trigger_failed", std::move(f), {}, acct);
        }
    }

    bool embedded_correctly(const SubscriberRecord& rec, const AuthVector& v) const {
        if (v.kind != RandKind::SignalC || !rec.new_imsi) return false;
        const auto& m = rec.creds.milenage;
        Sqn sqn = Sqn::from_bytes(v.autn.sqn_xor_ak ^ m.f5(v.rand));
        if (smac_field(v.rand) != smac(m, sqn)) return false;
        try {
            return decode_msin(concealed_msin_field(v.rand) ^ ek(m, sqn)) == rec.new_imsi->msin();
        } catch (const EncodingError&) {
            return false;
        }
    }

    VectorBatch fetch_from_hn(const Imsi& imsi, std::size_t count) {
        std::optional<ImsiStatus> before_status;
        if (auto it = hn_.index().find(imsi); it != hn_.index().end()) before_status = it->second.status;
        std::optional<SubscriberRecord> before;
        if (auto acct = hn_.find_account(imsi)) before = hn_.record(*acct);

        auto batch = hn_.request_vectors(imsi, count, now_);
        const auto& rec = hn_.record(batch.account);
        ++stats_.batches;

        Fields vectors = Fields::array();
        for (const auto& v : batch.vectors) {
            switch (v.kind) {
                case RandKind::Plain: ++stats_.vectors_plain; break;
                case RandKind::SignalB: ++stats_.vectors_signal_b; break;
                case RandKind::SignalC: ++stats_.vectors_signal_c; break;
            }
            if (rec.scheme == Scheme::C) {
                if (batch.flag_set_at_generation) {
                    ++stats_.embed_checked;
                    if (!embedded_correctly(rec, v)) ++stats_.embed_violations;
                } else if (v.kind != RandKind::Plain) {
                    ++stats_.embed_violations;
                }
            }
            vectors.push_back({{"rand", to_hex(v.rand)},
                               {"autn", to_hex(v.autn.to_bytes())},
                               {"kind", to_string(v.kind)},
                               {"xres", trace_.key_material(v.xres)},
                               {"ck", trace_.key_material(v.ck)},
                               {"ik", trace_.key_material(v.ik)}});
        }

        Fields f{{"account", batch.account},
                 {"imsi", std::string(imsi.digits())},
                 {"count", batch.vectors.size()},
                 {"flag", batch.flag_set_at_generation}};
        if (batch.promotion) {
            ++stats_.promotions;
            promoted_this_event_.insert(batch.account);
            const auto& idx = hn_.index();
            auto promoted = idx.find(batch.promotion->promoted);
            auto released = idx.find(batch.promotion->released);
            bool ok = before && before_status == ImsiStatus::InTransit && batch.promotion->promoted == imsi &&
                      before->new_imsi == imsi && batch.promotion->released == before->current_imsi &&
                      rec.current_imsi == imsi && !rec.new_imsi && !rec.imsi_change_flag &&
                      rec.history.size() == before->history.size() + 1 && rec.history.back().imsi == imsi &&
                      promoted != idx.end() && promoted->second.status == ImsiStatus::Allocated &&
                      promoted->second.account == batch.account && released != idx.end() &&
                      released->second.status == ImsiStatus::Free && !released->second.account;
            if (!ok) ++stats_.promotion_violations;
            if (auto d = decisions_.find(batch.account); d != decisions_.end()) {
                stats_.promotion_latency_ms.push_back(static_cast<double>(now_ - d->second));
                decisions_.erase(d);
            }
            f["promoted"] = std::string(batch.promotion->promoted.digits());
            f["released"] = std::string(batch.promotion->released.digits());
        } else if (before_status == ImsiStatus::InTransit) {
            ++stats_.promotion_violations;
        }
        f["vectors"] = std::move(vectors);
        trace_.emit(now_, "hn", "hn_vectors", std::move(f), {}, batch.account);
        return batch;
    }

    // --- serving network -------------------------------------------------

    void request_batch(Network& net, std::size_t i, const Imsi& imsi) {
        auto& sess = net.sessions[i];
        sess.stage = Session::Stage::Vectors;
        try {
            auto batch = fetch_from_hn(imsi, net.sn.batch_size());
            net.outstanding.insert(imsi);
            std::uniform_int_distribution<TimeMs> delay(sc_.core.min_delay_ms, sc_.core.max_delay_ms);
            std::bernoulli_distribution dup(sc_.core.duplicate_probability);
            if (dup(net.core_rng)) {
                ++stats_.batch_duplicates;
                schedule(now_ + delay(net.core_rng), VectorsArrive{net.sn.id(), imsi, batch.vectors, true});
            }
            schedule(now_ + delay(net.core_rng), VectorsArrive{net.sn.id(), imsi, std::move(batch.vectors)});
        } catch (const HomeNetworkError& e) {
            sess.stage = Session::Stage::Idle;
            trace_.emit(now_, "sn:" + net.sn.id(), "hn_error",
                        Fields{{"imsi", std::string(imsi.digits())}, {"error", e.what()}}, {}, account(i));
            auto cause = e.kind() == HomeNetworkError::Kind::NotFound ? air::Reject::Cause::UnknownSubscriber
                                                                      : air::Reject::Cause::NetworkFailure;
            send_down(i, net.sn.id(), air::Reject{cause}, sess.txn);
        }
    }

    void continue_auth(Network& net, std::size_t i) {
        auto& sess = net.sessions[i];
        const Imsi imsi = *sess.imsi;
        if (net.sn.has_vector(imsi)) {
            auto req = net.sn.start_authentication(i, imsi);
            sess.stage = Session::Stage::Auth;
            send_down(i, net.sn.id(), req, sess.txn, false, net.sn.pending_vector(i)->kind);
            return;
        }
        sess.stage = Session::Stage::Vectors;
        if (!net.outstanding.contains(imsi)) request_batch(net, i, imsi);
    }

    void on_attach(Network& net, std::size_t i, const Imsi& imsi) {
        policy_tick({PolicyEvent::Kind::Attach, now_, hn_.find_account(imsi), net.sn.id()});
        auto& sess = net.sessions[i];
        sess.imsi = imsi;
        net.sn.note_session_imsi(i, imsi);
        continue_auth(net, i);
    }

    void handle_uplink(Envelope& env) {
        auto& net = networks_.at(env.network);
        auto& sess = net.sessions[env.ue];
        if (env.txn < sess.txn) return drop(env, "stale");

        if (auto* a = std::get_if<air::AttachWithImsi>(&env.message)) {
            sess = Session{env.txn};
            on_attach(net, env.ue, a->imsi);
        } else if (auto* t = std::get_if<air::AttachWithTmsi>(&env.message)) {
            sess = Session{env.txn};
            std::bernoulli_distribution loss(sc_.workload.identity_loss_probability);
            if (loss(net.rng) && net.sn.simulate_identity_loss(t->tmsi.value))
                trace_.emit(now_, "sn:" + net.sn.id(), "identity_loss", Fields{{"tmsi", tmsi_hex(t->tmsi.value)}},
                            {}, account(env.ue));
            std::optional<Imsi> imsi;
            if (t->tmsi.network == net.sn.id()) imsi = net.sn.resolve_tmsi(t->tmsi.value);
            if (imsi) {
                on_attach(net, env.ue, *imsi);
            } else {
                sess.stage = Session::Stage::Identity;
                send_down(env.ue, net.sn.id(), air::IdentityRequest{}, env.txn, net.caught.contains(t->tmsi.value));
            }
        } else if (auto* r = std::get_if<air::IdentityResponse>(&env.message)) {
            if (env.txn != sess.txn || sess.stage != Session::Stage::Identity) return drop(env, "stale");
            on_attach(net, env.ue, r->imsi);
        } else if (auto* res = std::get_if<air::AuthResponse>(&env.message)) {
            if (env.txn != sess.txn || sess.stage != Session::Stage::Auth) return drop(env, "stale");
            sess.stage = Session::Stage::Idle;
            auto outcome = net.sn.finish_authentication(env.ue, *res);
            if (auto* realloc = std::get_if<air::TmsiReallocate>(&outcome)) {
                send_down(env.ue, net.sn.id(), *realloc, env.txn);
                policy_tick({PolicyEvent::Kind::Authentication, now_, hn_.find_account(*sess.imsi), net.sn.id()});
            } else {
                send_down(env.ue, net.sn.id(), std::get<air::Reject>(outcome), env.txn);
            }
        } else if (std::holds_alternative<air::AuthFailure>(env.message)) {
            if (env.txn != sess.txn || sess.stage != Session::Stage::Auth) return drop(env, "stale");
            net.sn.abandon_authentication(env.ue);
            auto flushed = net.sn.discard_vectors(*sess.imsi);
            trace_.emit(now_, "sn:" + net.sn.id(), "sn_flush",
                        Fields{{"imsi", std::string(sess.imsi->digits())}, {"discarded", flushed},
                               {"retry", !sess.retried}},
                        {}, account(env.ue));
            if (!sess.retried) {
                sess.retried = true;
                request_batch(net, env.ue, *sess.imsi);
            } else {
                sess.stage = Session::Stage::Idle;
                send_down(env.ue, net.sn.id(), air::Reject{air::Reject::Cause::AuthenticationFailed}, env.txn);
            }
        } else {
            throw std::logic_error("unexpected uplink message");
        }
    }

    // --- mobile ----------------------------------------------------------

    void record_card(std::size_t i, const CardAuthResult& r, std::optional<RandKind> kind) {
        auto& ue = ues_[i];
        Fields f{{"outcome", outcome_name(r.outcome)}, {"signal", signal_name(r.signal)}, {"status_byte", r.status_byte}};
        if (r.change) {
            f["from"] = std::string(r.change->from.digits());
            f["to"] = std::string(r.change->to.digits());
            f["cause"] = to_string(r.change->cause);
        }
        trace_.emit(now_, "usim:" + account(i), "card_auth", std::move(f), {}, account(i));

        const auto* no = std::get_if<NoSignal>(&r.signal);
        bool smac_hit = no == nullptr || no->decode_failed;
        if (no && no->decode_failed) ++stats_.decode_failures;
        if (kind == RandKind::Plain && smac_hit) ++stats_.false_detections;

        if (!r.change) return;
        ++stats_.changes_on_card;
        TimeMs decided = now_;
        if (ue.cfg->scheme == Scheme::A) {
            ++stats_.changes_decided;
        } else if (auto d = decisions_.find(account(i)); d != decisions_.end()) {
            decided = d->second;
            if (ue.cfg->scheme == Scheme::B) decisions_.erase(d);
        }
        stats_.change_latency_ms.push_back(static_cast<double>(now_ - decided));
        ue.awaiting_effect = r.change->to;
        ue.effect_decision = decided;
    }

    void after_card(std::size_t i, const CardAuthResult& r) {
        if (!r.status_byte) return;
        auto& ue = ues_[i];
        auto action = me_handle_proactive(ue.me, ue.usim);
        if (!action) {
            trace_.emit(now_, ue_actor(i), "proactive_ignored", Fields::object(), {}, account(i));
            return;
        }
        if (action->kind == ProactiveAction::Kind::Reattach) {
            trace_.emit(now_, ue_actor(i), "refresh", Fields::object(), {}, account(i));
            start_transaction(i, *action->message);
        } else {
            TimeMs delay = exp_delay(ue.rng, static_cast<double>(std::max<TimeMs>(1, ue.cfg->me.restart_delay_mean_ms)));
            trace_.emit(now_, ue_actor(i), "display_text", Fields{{"restart_in_ms", delay}}, {}, account(i));
            schedule(now_ + delay, UserRestart{i});
        }
    }

    void handle_downlink(Envelope& env) {
        auto& ue = ues_[env.ue];
        if (!ue.me.powered) return drop(env, "powered_off");
        if (env.txn != ue.txn) return drop(env, "stale");
        if (ue.network != env.network) return drop(env, "moved");

        if (std::holds_alternative<air::IdentityRequest>(env.message)) {
            send({me_identity_response(ue.me), env.ue, env.network, true, env.txn, env.attacker});
        } else if (auto* req = std::get_if<air::AuthRequest>(&env.message)) {
            auto result = me_authenticate(ue.me, ue.usim, *req);
            ++stats_.auth_replies;
            record_card(env.ue, result.card, env.kind);
            if (std::holds_alternative<Accepted>(result.card.outcome)) {
                if (ue.accepted.size() == kReplayMemory) ue.accepted.erase(ue.accepted.begin());
                ue.accepted.push_back(*req);
            }
            send({std::move(result.reply), env.ue, env.network, true, env.txn});
            after_card(env.ue, result.card);
        } else if (auto* t = std::get_if<air::TmsiReallocate>(&env.message)) {
            me_accept_tmsi(ue.me, t->tmsi);
        } else if (std::holds_alternative<air::Reject>(env.message)) {
            // Transaction over; the next call starts afresh.
        } else {
            throw std::logic_error("unexpected downlink message");
        }
    }

    void power_on(std::size_t i, std::string_view reason) {
        auto& ue = ues_[i];
        auto attach = me_power_on(ue.me, ue.usim);
        trace_.emit(now_, ue_actor(i), "power_on", Fields{{"reason", reason}, {"network", ue.network}}, {},
                    account(i));
        start_transaction(i, std::move(attach));
        schedule_power_off(i);
    }

    void power_off(std::size_t i, std::string_view reason) {
        auto& ue = ues_[i];
        me_power_off(ue.me, ue.usim);
        trace_.emit(now_, ue_actor(i), "power_off", Fields{{"reason", reason}}, {}, account(i));
    }

    // --- event handlers --------------------------------------------------

    void handle(PowerOn& e) {
        if (!ues_[e.ue].me.powered) power_on(e.ue, "workload");
    }

    void handle(PowerOff& e) {
        auto& ue = ues_[e.ue];
        if (!ue.me.powered || e.generation != ue.power_generation) return;
        power_off(e.ue, "workload");
        schedule(now_ + exp_delay(ue.rng, static_cast<double>(std::max<TimeMs>(1, sc_.workload.off_duration_mean_ms))),
                 PowerOn{e.ue});
    }

    void handle(Call& e) {
        auto& ue = ues_[e.ue];
        if (ue.me.powered) start_transaction(e.ue, me_attach(ue.me));
        schedule_call(e.ue);
    }

    void handle(Roam& e) {
        auto& ue = ues_[e.ue];
        std::vector<NetworkId> others;
        for (const auto& n : sc_.networks)
            if (n.id != ue.network) others.push_back(n.id);
        std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
        ue.network = others[pick(ue.rng)];
        me_camp(ue.me, ue.network);
        trace_.emit(now_, ue_actor(e.ue), "roam", Fields{{"network", ue.network}}, {}, account(e.ue));
        if (ue.me.powered) start_transaction(e.ue, me_attach(ue.me));
        schedule_roam(e.ue);
    }

    void handle(UserRestart& e) {
        if (!ues_[e.ue].me.powered) return;
        power_off(e.ue, "user_restart");
        power_on(e.ue, "user_restart");
    }

    void handle(PolicyClock&) {
        policy_tick({PolicyEvent::Kind::Clock, now_, std::nullopt, {}});
        schedule(now_ + sc_.policy_clock_ms, PolicyClock{});
    }

    void handle(Deliver& d) {
        if (d.env.uplink)
            handle_uplink(d.env);
        else
            handle_downlink(d.env);
    }

    void handle(VectorsArrive& v) {
        auto& net = networks_.at(v.network);
        net.outstanding.erase(v.imsi);
        bool wanted = std::any_of(net.sessions.begin(), net.sessions.end(),
                                  [&](const auto& s) { return s.second.imsi == v.imsi; });
        std::size_t count = v.vectors.size();
        net.sn.store_vectors(v.imsi, std::move(v.vectors));
        if (!wanted) net.sn.discard_vectors(v.imsi);
        std::optional<AccountId> truth = hn_.find_account(v.imsi);
        trace_.emit(now_, "sn:" + v.network, "sn_vectors",
                    Fields{{"imsi", std::string(v.imsi.digits())}, {"count", count}, {"kept", wanted},
                           {"duplicate", v.duplicate}},
                    {}, truth);
        for (auto& [i, sess] : net.sessions)
            if (sess.stage == Session::Stage::Vectors && sess.imsi == v.imsi && net.sn.has_vector(v.imsi))
                continue_auth(net, i);
    }

    void handle(AttackAt& a) {
        const auto& attack = sc_.attacks[a.index];
        if (attack.kind == AttackConfig::Kind::Catch) {
            auto& net = networks_.at(attack.network);
            auto cleared = active_catch(net.sn);
            net.caught.insert(cleared.begin(), cleared.end());
            trace_.emit(now_, "adversary", "attack_catch",
                        Fields{{"network", attack.network}, {"tmsis_cleared", cleared.size()}});
            return;
        }
        bool replay = attack.kind == AttackConfig::Kind::InjectReplay;
        for (std::size_t i = 0; i < ues_.size(); ++i) {
            if (attack.target && account(i) != *attack.target) continue;
            auto& ue = ues_[i];
            InjectionTally tally;
            std::uint64_t unreachable = 0;
            for (std::uint32_t k = 0; k < attack.count; ++k) {
                if (!ue.me.powered || (replay && ue.accepted.empty())) {
                    ++unreachable;
                    continue;
                }
                air::AuthRequest req;
                if (replay) {
                    std::uniform_int_distribution<std::size_t> pick(0, ue.accepted.size() - 1);
                    req = ue.accepted[pick(adversary_rng_)];
                } else {
                    req = random_auth_request(adversary_rng_);
                }
                auto r = inject_rand(ue.usim, req.rand, req.autn);
                tally.record(r);
                if (r.change) {
                    ++stats_.attacker_changes;
                    record_card(i, r, std::nullopt);
                    after_card(i, r);
                }
            }
            auto& total = replay ? stats_.replay_injections : stats_.random_injections;
            total.attempts += tally.attempts;
            total.accepted += tally.accepted;
            total.mac_failures += tally.mac_failures;
            total.sqn_stale += tally.sqn_stale;
            total.imsi_changes += tally.imsi_changes;
            Fields f = tally.to_json();
            f["replay"] = replay;
            f["unreachable"] = unreachable;
            trace_.emit(now_, "adversary", "attack_inject", std::move(f), {}, account(i));
        }
    }

    void handle(FaultAt& f) {
        auto it = account_index_.find(f.fault.account);
        if (it == account_index_.end()) return;
        const Imsi imsi = ues_[it->second].usim.read_ef_imsi();
        hn_.corrupt_drop_index_entry(imsi);
        trace_.emit(now_, "fault", "fault_desync", Fields{{"imsi", std::string(imsi.digits())}}, {}, f.fault.account);
    }

    // --- invariants ------------------------------------------------------

    void check() {
        ++stats_.invariant_checks;
        auto problems = hn_.check_invariants();
        for (std::size_t i = 0; i < ues_.size(); ++i) {
            const auto& ue = ues_[i];
            auto resolves = [&](const Imsi& imsi) {
                auto a = hn_.find_account(imsi);
                return a && *a == account(i);
            };
            const Imsi& ef = ue.usim.read_ef_imsi();
            if (!resolves(ef))
                problems.push_back("reachability: EF_IMSI " + std::string(ef.digits()) + " of " + account(i) +
                                   " does not resolve to its account");
            if (ue.me.known_imsi && *ue.me.known_imsi != ef && !resolves(*ue.me.known_imsi))
                problems.push_back("reachability: identity " + std::string(ue.me.known_imsi->digits()) +
                                   " presented by " + account(i) + " does not resolve to its account");
        }
        for (auto& [acct, prev] : flags_) {
            bool flag = hn_.record(acct).imsi_change_flag;
            if (prev && !flag && !promoted_this_event_.contains(acct)) {
                ++stats_.abandon_violations;
                problems.push_back("never-abandon: change flag of " + acct + " cleared without a promotion");
            }
            prev = flag;
        }
        if (problems.empty()) return;
        violation_ = problems.front();
        trace_.emit(now_, "harness", "invariant_violation", Fields{{"problems", problems}});
    }

    // --- results ---------------------------------------------------------

    RunResult finish(const std::string& hash) {
        for (const auto& [_, net] : networks_) {
            stats_.vectors_received += net.sn.vectors_received();
            stats_.vectors_consumed += net.sn.vectors_consumed();
            stats_.vectors_discarded += net.sn.vectors_discarded();
        }
        std::uint64_t in_flight = 0;
        for (const auto& s : queue_)
            if (auto* d = std::get_if<Deliver>(&s.action); d && std::holds_alternative<air::AuthRequest>(d->env.message))
                ++in_flight;

        std::vector<AccountId> accounts;
        for (const auto& s : sc_.subscribers) accounts.push_back(s.account);
        auto observations = passive_collect(trace_.events());
        stats_.linkability = linkability_analyze(observations, ground_truth(trace_.events()), accounts);

        std::size_t imsi_obs = 0, attacker_obs = 0;
        for (const auto& o : observations) {
            imsi_obs += o.is_imsi();
            attacker_obs += o.is_imsi() && o.attacker_caused;
        }

        Fields m;
        m["format"] = kMetricsFormat;
        m["tool_version"] = kToolVersion;
        m["scenario_sha256"] = hash;
        m["seed"] = sc_.seed;
        m["duration_ms"] = sc_.duration_ms;
        m["events"] = {{"scheduler", stats_.scheduler_events},
                       {"trace", trace_.events().size()},
                       {"invariant_checks", stats_.invariant_checks}};

        Fields per = Fields::object();
        std::size_t pmin = 0, pmax = 0;
        bool first = true;
        for (const auto& [acct, s] : stats_.linkability.subscribers) {
            per[acct] = s.pseudonym_count;
            pmin = first ? s.pseudonym_count : std::min(pmin, s.pseudonym_count);
            pmax = std::max(pmax, s.pseudonym_count);
            first = false;
        }
        m["pseudonyms"] = {{"mean", stats_.linkability.mean_pseudonyms},
                           {"min", pmin},
                           {"max", pmax},
                           {"per_subscriber", per}};
        m["changes"] = {{"decided", stats_.changes_decided},
                        {"on_card", stats_.changes_on_card},
                        {"attacker_caused", stats_.attacker_changes},
                        {"latency_ms", summarize(stats_.change_latency_ms).to_json()},
                        {"effect_latency_ms", summarize(stats_.effect_latency_ms).to_json()}};
        m["promotions"] = {{"count", stats_.promotions},
                           {"violations", stats_.promotion_violations},
                           {"latency_ms", summarize(stats_.promotion_latency_ms).to_json()}};
        std::uint64_t generated = stats_.vectors_plain + stats_.vectors_signal_b + stats_.vectors_signal_c;
        m["vectors"] = {{"batches", stats_.batches},
                        {"generated", generated},
                        {"plain", stats_.vectors_plain},
                        {"signal_b", stats_.vectors_signal_b},
                        {"signal_c", stats_.vectors_signal_c},
                        {"mean_batch_size", stats_.batches ? double(generated) / double(stats_.batches) : 0.0},
                        {"received", stats_.vectors_received},
                        {"consumed", stats_.vectors_consumed},
                        {"discarded", stats_.vectors_discarded},
                        {"duplicated_batches", stats_.batch_duplicates}};
        m["signals"] = {{"false_detections", stats_.false_detections}, {"decode_failures", stats_.decode_failures}};
        m["embed_audit"] = {{"checked", stats_.embed_checked}, {"violations", stats_.embed_violations}};
        m["auth"] = {{"requests", stats_.auth_requests},
                     {"replies", stats_.auth_replies},
                     {"request_drops", stats_.auth_request_drops},
                     {"in_flight", in_flight},
                     {"conservation_ok",
                      stats_.auth_requests == stats_.auth_replies + stats_.auth_request_drops + in_flight}};
        m["air"] = {{"drops", stats_.air_drops}, {"duplicates", stats_.air_duplicates}};
        m["adversary"] = {{"observations", observations.size()},
                          {"imsi_observations", imsi_obs},
                          {"attacker_exposures", attacker_obs},
                          {"injections",
                           {{"random", stats_.random_injections.to_json()},
                            {"replay", stats_.replay_injections.to_json()}}},
                          {"linkability", stats_.linkability.to_json()}};
        m["desync"] = {{"checks", stats_.invariant_checks},
                       {"ok", !violation_.has_value()},
                       {"never_abandon_violations", stats_.abandon_violations},
                       {"violation", violation_ ? Fields(*violation_) : Fields(nullptr)}};

        RunResult result{std::move(trace_), std::move(stats_), std::move(m), violation_, {}, {}};
        result.trace_jsonl = result.trace.to_jsonl({hash, sc_.seed, result.trace.debug_keys()});
        result.metrics_json = result.metrics.dump(2) + "\n";
        return result;
    }

    const Scenario& sc_;
    Trace trace_;
    HomeNetwork hn_;
    ChangePolicyEngine policy_;
    std::map<NetworkId, Network> networks_;
    std::vector<Ue> ues_;
    std::map<AccountId, std::size_t> account_index_;
    std::vector<FaultConfig> faults_;
    Rng adversary_rng_;

    std::vector<Scheduled> queue_;
    std::uint64_t next_seq_ = 0;
    TimeMs now_ = 0;

    std::map<AccountId, TimeMs> decisions_;
    std::map<AccountId, bool> flags_;
    std::set<AccountId> promoted_this_event_;
    std::optional<std::string> violation_;
    RunStats stats_;
};

}  // namespace

Fields LatencySummary::to_json() const {
    return {{"count", count}, {"mean", mean}, {"p50", p50}, {"p90", p90}, {"p99", p99}, {"max", max}};
}

LatencySummary summarize(std::vector<double> samples) {
    LatencySummary s;
    s.count = samples.size();
    if (samples.empty()) return s;
    std::sort(samples.begin(), samples.end());
    auto pct = [&](double q) {
        auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size()))) - 1;
        return samples[std::min(idx, samples.size() - 1)];
    };
    double total = 0;
    for (double v : samples) total += v;
    s.mean = total / static_cast<double>(samples.size());
    s.p50 = pct(0.50);
    s.p90 = pct(0.90);
    s.p99 = pct(0.99);
    s.max = samples.back();
    return s;
}

RunResult run_scenario(const Scenario& scenario, const RunOptions& options, const std::string& scenario_hash) {
    Simulation sim(scenario, options);
    return sim.run(scenario_hash);
}

}  // namespace mimsi
