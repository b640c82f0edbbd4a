#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aka.hpp"
#include "identity.hpp"
#include "random.hpp"

namespace mimsi {

using AccountId = std::string;
using TimeMs = std::int64_t;

class HomeNetworkError : public std::runtime_error {
public:
    enum class Kind { NotFound, UnknownAccount, PoolExhausted, Unsupported, Disabled, Provisioning };

    HomeNetworkError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct HistoryEntry {
    Imsi imsi;
    TimeMs activated_ms;
};

struct SubscriberRecord {
    AccountId account;
    AucCredentials creds;
    Scheme scheme;
    Imsi current_imsi;
    std::optional<Imsi> new_imsi;
    bool imsi_change_flag = false;
    std::vector<Imsi> predefined;
    std::vector<HistoryEntry> history;
    bool disabled = false;
};

struct Provisioning {
    AccountId account;
    SubscriberKey key;
    Block128 opc{};
    Amf amf = kNormalAmf;
    Sqn initial_sqn;
    Scheme scheme = Scheme::C;
    Imsi initial_imsi;
    std::vector<Imsi> predefined;
};

struct IndexEntry {
    std::optional<AccountId> account;
    ImsiStatus status = ImsiStatus::Free;
};

struct Promotion {
    Imsi promoted;
    Imsi released;
};

struct VectorBatch {
    AccountId account;
    std::vector<AuthVector> vectors;
    std::optional<Promotion> promotion;
    bool flag_set_at_generation = false;
};

struct TriggerResult {
    bool already_pending = false;
    std::optional<Imsi> allocated;
};

/// Subscriber database, IMSI index and AuC.
///
/// Scheme A/B accounts index every predefined IMSI permanently. Scheme C
/// accounts own one Allocated IMSI and at most one InTransit IMSI; the rest
/// of the configured space sits in the free pool. Mutations of one account
/// must be serialized by the caller.
class HomeNetwork {
public:
    explicit HomeNetwork(Rng rng, OperatorPrefix prefix);

    void add_free_imsi(const Imsi& imsi);
    void provision(const Provisioning& p, TimeMs now = 0);

    VectorBatch request_vectors(const Imsi& imsi, std::size_t count, TimeMs now);
    TriggerResult trigger_change(const AccountId& account, TimeMs now);
    AccountId lookup_account(const Imsi& imsi) const;
    std::optional<AccountId> find_account(const Imsi& imsi) const;

    const SubscriberRecord& record(const AccountId& account) const;
    const std::map<AccountId, SubscriberRecord>& records() const { return records_; }
    const std::map<Imsi, IndexEntry>& index() const { return index_; }
    std::size_t free_count() const { return free_pool_.size(); }
    std::size_t imsi_space() const { return index_.size(); }
    const OperatorPrefix& prefix() const { return prefix_; }

    /// Full scan of the index against the records. Empty when consistent.
    std::vector<std::string> check_invariants() const;

    /// Test hook: silently drops an IMSI from the index to simulate a
    /// corrupted database.
    void corrupt_drop_index_entry(const Imsi& imsi);

private:
    SubscriberRecord& mutable_record(const AccountId& account);
    std::optional<Imsi> take_free_imsi(const SubscriberRecord& rec);

    Rng rng_;
    OperatorPrefix prefix_;
    std::map<AccountId, SubscriberRecord> records_;
    std::map<Imsi, IndexEntry> index_;
    std::vector<Imsi> free_pool_;
    std::size_t configured_space_ = 0;
};

struct ChangePolicy {
    enum class Kind { Manual, EveryNAuthentications, OnServingNetworkChange, FixedInterval };
    Kind kind = Kind::Manual;
    std::uint32_t n = 0;
    TimeMs interval_ms = 0;
};

ChangePolicy::Kind parse_policy_kind(std::string_view text);
std::string_view to_string(ChangePolicy::Kind kind);

struct PolicyEvent {
    enum class Kind { Authentication, Attach, Clock };
    Kind kind = Kind::Clock;
    TimeMs time = 0;
    std::optional<AccountId> account;
    NetworkId network;
};

/// Decides when the home network asks for an IMSI change.
class ChangePolicyEngine {
public:
    void configure(const AccountId& account, const ChangePolicy& policy, TimeMs start = 0);
    std::vector<AccountId> tick(const PolicyEvent& event);
    const ChangePolicy* policy(const AccountId& account) const;

private:
    struct State {
        ChangePolicy policy;
        std::uint32_t auth_count = 0;
        std::optional<NetworkId> last_network;
        TimeMs next_due = 0;
    };
    std::map<AccountId, State> states_;
};

}  // namespace mimsi
