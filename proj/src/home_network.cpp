#include "home_network.hpp"

#include <algorithm>
#include <set>

namespace mimsi {

HomeNetwork::HomeNetwork(Rng rng, OperatorPrefix prefix) : rng_(std::move(rng)), prefix_(std::move(prefix)) {}

void HomeNetwork::add_free_imsi(const Imsi& imsi) {
    if (imsi.mcc() != prefix_.mcc || imsi.mnc() != prefix_.mnc)
        throw HomeNetworkError(HomeNetworkError::Kind::Provisioning,
                               "pool IMSI " + std::string(imsi.digits()) + " has a foreign operator prefix");
    if (index_.contains(imsi))
        throw HomeNetworkError(HomeNetworkError::Kind::Provisioning,
                               "IMSI " + std::string(imsi.digits()) + " configured twice");
    index_.emplace(imsi, IndexEntry{std::nullopt, ImsiStatus::Free});
    free_pool_.push_back(imsi);
    ++configured_space_;
}

void HomeNetwork::provision(const Provisioning& p, TimeMs now) {
    using K = HomeNetworkError::Kind;
    if (records_.contains(p.account)) throw HomeNetworkError(K::Provisioning, "duplicate account " + p.account);
    if (p.amf == kSmacAmf) throw HomeNetworkError(K::Provisioning, "AMF 0xFFFF is reserved");

    std::vector<Imsi> owned;
    if (p.scheme == Scheme::C) {
        if (!p.predefined.empty())
            throw HomeNetworkError(K::Provisioning, p.account + ": scheme C takes no predefined list");
        if (p.initial_imsi.mcc() != prefix_.mcc || p.initial_imsi.mnc() != prefix_.mnc)
            throw HomeNetworkError(K::Provisioning, p.account + ": initial IMSI has a foreign prefix");
        owned.push_back(p.initial_imsi);
    } else {
        if (p.predefined.size() < 2)
            throw HomeNetworkError(K::Provisioning, p.account + ": predefined list needs at least 2 IMSIs");
        if (std::find(p.predefined.begin(), p.predefined.end(), p.initial_imsi) == p.predefined.end())
            throw HomeNetworkError(K::Provisioning, p.account + ": initial IMSI not in predefined list");
        owned = p.predefined;
    }
    std::set<Imsi> seen;
    for (const auto& imsi : owned) {
        if (index_.contains(imsi) || !seen.insert(imsi).second)
            throw HomeNetworkError(K::Provisioning,
                                   p.account + ": IMSI " + std::string(imsi.digits()) + " already in use");
    }
    for (const auto& imsi : owned) {
        index_.emplace(imsi, IndexEntry{p.account, ImsiStatus::Allocated});
        ++configured_space_;
    }

    SubscriberRecord rec{p.account,
                         AucCredentials{Milenage(p.key, p.opc), p.initial_sqn, p.amf},
                         p.scheme,
                         p.initial_imsi,
                         std::nullopt,
                         false,
                         p.scheme == Scheme::C ? std::vector<Imsi>{} : p.predefined,
                         {},
                         false};
    if (p.scheme == Scheme::C) {
        rec.history.push_back({p.initial_imsi, now});
    } else {
        for (const auto& imsi : p.predefined) rec.history.push_back({imsi, now});
    }
    records_.emplace(p.account, std::move(rec));
}

SubscriberRecord& HomeNetwork::mutable_record(const AccountId& account) {
    auto it = records_.find(account);
    if (it == records_.end())
        throw HomeNetworkError(HomeNetworkError::Kind::UnknownAccount, "unknown account " + account);
    return it->second;
}

const SubscriberRecord& HomeNetwork::record(const AccountId& account) const {
    auto it = records_.find(account);
    if (it == records_.end())
        throw HomeNetworkError(HomeNetworkError::Kind::UnknownAccount, "unknown account " + account);
    return it->second;
}

std::optional<AccountId> HomeNetwork::find_account(const Imsi& imsi) const {
    auto it = index_.find(imsi);
    if (it == index_.end() || it->second.status == ImsiStatus::Free) return std::nullopt;
    return it->second.account;
}

AccountId HomeNetwork::lookup_account(const Imsi& imsi) const {
    auto account = find_account(imsi);
    if (!account)
        throw HomeNetworkError(HomeNetworkError::Kind::NotFound,
                               "IMSI " + std::string(imsi.digits()) + " does not address an account");
    return *account;
}

VectorBatch HomeNetwork::request_vectors(const Imsi& imsi, std::size_t count, TimeMs now) {
    AccountId account = lookup_account(imsi);
    auto& rec = mutable_record(account);
    if (rec.disabled)
        throw HomeNetworkError(HomeNetworkError::Kind::Disabled, "account " + account + " is disabled");
    if (Sqn::kMax - rec.creds.sqn.value() < count) {
        rec.disabled = true;
        throw HomeNetworkError(HomeNetworkError::Kind::Disabled,
                               "account " + account + " would exhaust its 48-bit SQN space");
    }

    VectorBatch batch;
    batch.account = account;
    auto& entry = index_.at(imsi);
    if (entry.status == ImsiStatus::InTransit) {
        // Implicit acknowledgement: the card is now presenting the new IMSI.
        Imsi released = rec.current_imsi;
        auto& old_entry = index_.at(released);
        old_entry.status = ImsiStatus::Free;
        old_entry.account.reset();
        free_pool_.push_back(released);
        entry.status = ImsiStatus::Allocated;
        rec.current_imsi = imsi;
        rec.new_imsi.reset();
        rec.imsi_change_flag = false;
        rec.history.push_back({imsi, now});
        batch.promotion = Promotion{imsi, released};
    } else if (rec.scheme != Scheme::C) {
        rec.current_imsi = imsi;
    }

    batch.flag_set_at_generation = rec.imsi_change_flag;
    batch.vectors.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (rec.scheme == Scheme::B && rec.imsi_change_flag) {
            rec.imsi_change_flag = false;
            batch.vectors.push_back(generate_vector_signal_b(rec.creds, rng_));
        } else if (rec.scheme == Scheme::C && rec.imsi_change_flag) {
            batch.vectors.push_back(generate_vector_signal_c(rec.creds, *rec.new_imsi, rng_));
        } else {
            batch.vectors.push_back(generate_vector_plain(rec.creds, rng_));
        }
    }
    return batch;
}

std::optional<Imsi> HomeNetwork::take_free_imsi(const SubscriberRecord& rec) {
    // An account never gets back a pseudonym it has used before.
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < free_pool_.size(); ++i) {
        bool used = std::any_of(rec.history.begin(), rec.history.end(),
                                [&](const HistoryEntry& h) { return h.imsi == free_pool_[i]; });
        if (!used) eligible.push_back(i);
    }
    if (eligible.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    std::size_t slot = eligible[pick(rng_)];
    Imsi chosen = free_pool_[slot];
    free_pool_[slot] = free_pool_.back();
    free_pool_.pop_back();
    return chosen;
}

TriggerResult HomeNetwork::trigger_change(const AccountId& account, TimeMs /*now*/) {
    auto& rec = mutable_record(account);
    TriggerResult result;
    switch (rec.scheme) {
        case Scheme::A:
            throw HomeNetworkError(HomeNetworkError::Kind::Unsupported,
                                   "account " + account + " uses card-initiated changes");
        case Scheme::B:
            result.already_pending = rec.imsi_change_flag;
            rec.imsi_change_flag = true;
            return result;
        case Scheme::C:
            if (rec.imsi_change_flag) {
                result.already_pending = true;
                return result;
            }
            if (auto chosen = take_free_imsi(rec)) {
                auto& entry = index_.at(*chosen);
                entry.status = ImsiStatus::InTransit;
                entry.account = account;
                rec.new_imsi = *chosen;
                rec.imsi_change_flag = true;
                result.allocated = *chosen;
                return result;
            }
            throw HomeNetworkError(HomeNetworkError::Kind::PoolExhausted,
                                   "no free IMSI available for account " + account);
    }
    return result;
}

std::vector<std::string> HomeNetwork::check_invariants() const {
    std::vector<std::string> violations;
    auto fail = [&](std::string msg) { violations.push_back(std::move(msg)); };

    if (index_.size() != configured_space_)
        fail("conservation: index holds " + std::to_string(index_.size()) + " IMSIs, configured " +
             std::to_string(configured_space_));

    std::set<Imsi> pool(free_pool_.begin(), free_pool_.end());
    if (pool.size() != free_pool_.size()) fail("conservation: free pool holds a duplicate");

    std::size_t free_in_index = 0;
    for (const auto& [imsi, entry] : index_) {
        const std::string digits(imsi.digits());
        if (entry.status == ImsiStatus::Free) {
            ++free_in_index;
            if (entry.account) fail("uniqueness: free IMSI " + digits + " still names an account");
            if (!pool.contains(imsi)) fail("conservation: free IMSI " + digits + " missing from pool");
            continue;
        }
        if (!entry.account) {
            fail("uniqueness: IMSI " + digits + " is " + std::string(to_string(entry.status)) + " with no account");
            continue;
        }
        auto rit = records_.find(*entry.account);
        if (rit == records_.end()) {
            fail("uniqueness: IMSI " + digits + " names unknown account " + *entry.account);
            continue;
        }
        const auto& rec = rit->second;
        bool claimed = rec.scheme == Scheme::C
                           ? (rec.current_imsi == imsi || (rec.new_imsi && *rec.new_imsi == imsi))
                           : std::find(rec.predefined.begin(), rec.predefined.end(), imsi) != rec.predefined.end();
        if (!claimed) fail("uniqueness: IMSI " + digits + " indexed to " + rec.account + " which does not hold it");
    }
    if (free_in_index != free_pool_.size()) fail("conservation: pool size differs from free index entries");

    std::map<Imsi, AccountId> claims;
    auto claim = [&](const Imsi& imsi, const AccountId& account) {
        auto [it, inserted] = claims.emplace(imsi, account);
        if (!inserted && it->second != account)
            fail("uniqueness: IMSI " + std::string(imsi.digits()) + " held by " + it->second + " and " + account);
    };

    for (const auto& [account, rec] : records_) {
        auto status_of = [&](const Imsi& imsi) -> std::optional<IndexEntry> {
            auto it = index_.find(imsi);
            if (it == index_.end()) return std::nullopt;
            return it->second;
        };
        if (rec.scheme == Scheme::C) {
            claim(rec.current_imsi, account);
            auto cur = status_of(rec.current_imsi);
            if (!cur || cur->status != ImsiStatus::Allocated || cur->account != account)
                fail("reachability: current IMSI of " + account + " is not allocated to it");
            if (rec.new_imsi.has_value() != rec.imsi_change_flag)
                fail("never-abandon: " + account + " change flag and new IMSI disagree");
            if (rec.new_imsi) {
                claim(*rec.new_imsi, account);
                auto nxt = status_of(*rec.new_imsi);
                if (!nxt || nxt->status != ImsiStatus::InTransit || nxt->account != account)
                    fail("uniqueness: new IMSI of " + account + " is not in transit to it");
            }
            if (rec.history.empty() || rec.history.back().imsi != rec.current_imsi)
                fail("history: last entry of " + account + " is not the current IMSI");
            std::set<Imsi> hist;
            for (const auto& h : rec.history)
                if (!hist.insert(h.imsi).second)
                    fail("history: " + account + " lists " + std::string(h.imsi.digits()) + " twice");
        } else {
            for (const auto& imsi : rec.predefined) {
                claim(imsi, account);
                auto e = status_of(imsi);
                if (!e || e->status != ImsiStatus::Allocated || e->account != account)
                    fail("reachability: predefined IMSI " + std::string(imsi.digits()) + " of " + account +
                         " does not resolve to it");
            }
            if (std::find(rec.predefined.begin(), rec.predefined.end(), rec.current_imsi) == rec.predefined.end())
                fail("uniqueness: current IMSI of " + account + " outside its predefined list");
        }
    }
    return violations;
}

void HomeNetwork::corrupt_drop_index_entry(const Imsi& imsi) { index_.erase(imsi); }

ChangePolicy::Kind parse_policy_kind(std::string_view text) {
    using K = ChangePolicy::Kind;
    if (text == "manual") return K::Manual;
    if (text == "every_n") return K::EveryNAuthentications;
    if (text == "on_network_change") return K::OnServingNetworkChange;
    if (text == "interval") return K::FixedInterval;
    throw std::invalid_argument("unknown policy '" + std::string(text) +
                                "' (expected manual, every_n, on_network_change or interval)");
}

std::string_view to_string(ChangePolicy::Kind kind) {
    using K = ChangePolicy::Kind;
    switch (kind) {
        case K::Manual: return "manual";
        case K::EveryNAuthentications: return "every_n";
        case K::OnServingNetworkChange: return "on_network_change";
        case K::FixedInterval: return "interval";
    }
    return "?";
}

void ChangePolicyEngine::configure(const AccountId& account, const ChangePolicy& policy, TimeMs start) {
    if (policy.kind == ChangePolicy::Kind::EveryNAuthentications && policy.n == 0)
        throw std::invalid_argument("every_n policy needs n >= 1");
    if (policy.kind == ChangePolicy::Kind::FixedInterval && policy.interval_ms <= 0)
        throw std::invalid_argument("interval policy needs a positive interval");
    State s;
    s.policy = policy;
    s.next_due = start + policy.interval_ms;
    states_[account] = s;
}

const ChangePolicy* ChangePolicyEngine::policy(const AccountId& account) const {
    auto it = states_.find(account);
    return it == states_.end() ? nullptr : &it->second.policy;
}

std::vector<AccountId> ChangePolicyEngine::tick(const PolicyEvent& event) {
    using K = ChangePolicy::Kind;
    std::vector<AccountId> due;

    if (event.kind == PolicyEvent::Kind::Clock) {
        for (auto& [account, s] : states_) {
            if (s.policy.kind != K::FixedInterval || event.time < s.next_due) continue;
            due.push_back(account);
            while (s.next_due <= event.time) s.next_due += s.policy.interval_ms;
        }
        return due;
    }

    if (!event.account) return due;
    auto it = states_.find(*event.account);
    if (it == states_.end()) return due;
    auto& s = it->second;

    if (event.kind == PolicyEvent::Kind::Authentication && s.policy.kind == K::EveryNAuthentications) {
        if (++s.auth_count >= s.policy.n) {
            s.auth_count = 0;
            due.push_back(*event.account);
        }
    } else if (event.kind == PolicyEvent::Kind::Attach) {
        bool moved = s.last_network && *s.last_network != event.network;
        s.last_network = event.network;
        if (moved && s.policy.kind == K::OnServingNetworkChange) due.push_back(*event.account);
    }
    return due;
}

}  // namespace mimsi
