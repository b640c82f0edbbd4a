#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "aka.hpp"
#include "home_network.hpp"
#include "identity.hpp"
#include "usim.hpp"

namespace mimsi {

namespace air {

struct AttachWithImsi {
    Imsi imsi;
};
struct AttachWithTmsi {
    Tmsi tmsi;
};
struct IdentityRequest {};
struct IdentityResponse {
    Imsi imsi;
};
struct AuthRequest {
    Block128 rand{};
    Autn autn{};
};
struct AuthResponse {
    Block64 res{};
};
struct AuthFailure {
    enum class Cause { MacFailure, SynchFailure };
    Cause cause;
};
struct TmsiReallocate {
    Tmsi tmsi;
};
struct Reject {
    enum class Cause { UnknownSubscriber, AuthenticationFailed, NetworkFailure };
    Cause cause;
};

}  // namespace air

using AirMessage = std::variant<air::AttachWithImsi, air::AttachWithTmsi, air::IdentityRequest,
                                air::IdentityResponse, air::AuthRequest, air::AuthResponse,
                                air::AuthFailure, air::TmsiReallocate, air::Reject>;

std::string_view message_name(const AirMessage& message);
std::string_view to_string(air::Reject::Cause cause);

/// The only two message kinds that carry a cleartext IMSI.
std::optional<Imsi> cleartext_imsi(const AirMessage& message);

struct MeState {
    bool powered = false;
    std::optional<Tmsi> tmsi;
    std::optional<NetworkId> camped_network;
    bool proactive_support = true;
    bool refresh_capable = true;
    std::optional<Imsi> known_imsi;  // EF_IMSI as last read by the ME
};

AirMessage me_power_on(MeState& me, Usim& usim);
void me_power_off(MeState& me, Usim& usim);
void me_camp(MeState& me, const NetworkId& network);

/// Start of a later transaction (call, location update) while powered.
AirMessage me_attach(const MeState& me);
air::IdentityResponse me_identity_response(const MeState& me);

struct MeAuthResult {
    AirMessage reply;
    CardAuthResult card;
};
MeAuthResult me_authenticate(MeState& me, Usim& usim, const air::AuthRequest& request);
void me_accept_tmsi(MeState& me, const Tmsi& tmsi);

struct ProactiveAction {
    enum class Kind { Reattach, UserRestart };
    Kind kind;
    std::optional<AirMessage> message;
};

/// Runs FETCH / TERMINAL RESPONSE after a status byte. Empty when the ME has
/// no proactive support and ignores the status byte.
std::optional<ProactiveAction> me_handle_proactive(MeState& me, Usim& usim);

/// Visited or home serving network: TMSI table and per-IMSI vector buffer.
class ServingNetwork {
public:
    using SessionId = std::uint64_t;

    ServingNetwork(NetworkId id, std::size_t batch_size, std::uint64_t tmsi_key = 0);

    const NetworkId& id() const { return id_; }
    std::size_t batch_size() const { return batch_size_; }

    std::optional<Imsi> resolve_tmsi(std::uint32_t tmsi) const;
    /// Removes a TMSI mapping so the next transaction needs an identity
    /// request. Unknown TMSIs are ignored.
    bool simulate_identity_loss(std::uint32_t tmsi);
    std::vector<std::uint32_t> tmsis() const;

    /// Records which IMSI a radio session presented; switching IMSI drops the
    /// vectors buffered for the previous one.
    void note_session_imsi(SessionId session, const Imsi& imsi);

    bool has_vector(const Imsi& imsi) const;
    std::size_t buffered(const Imsi& imsi) const;
    void store_vectors(const Imsi& imsi, std::vector<AuthVector> vectors);
    std::size_t discard_vectors(const Imsi& imsi);

    /// Dequeues the next vector for `imsi` and remembers its XRES for the session.
    air::AuthRequest start_authentication(SessionId session, const Imsi& imsi);
    const AuthVector* pending_vector(SessionId session) const;

    /// Compares RES with the stored XRES. On success allocates a fresh TMSI.
    std::variant<air::TmsiReallocate, air::Reject> finish_authentication(SessionId session,
                                                                        const air::AuthResponse& response);
    void abandon_authentication(SessionId session);

    std::uint64_t vectors_received() const { return vectors_received_; }
    std::uint64_t vectors_consumed() const { return vectors_consumed_; }
    std::uint64_t vectors_discarded() const { return vectors_discarded_; }

private:
    struct Pending {
        Imsi imsi;
        AuthVector vector;
    };

    std::uint32_t next_tmsi_value();

    NetworkId id_;
    std::size_t batch_size_;
    std::uint64_t tmsi_key_;
    std::uint64_t tmsi_counter_ = 0;
    std::map<std::uint32_t, Imsi> tmsi_table_;
    std::map<Imsi, std::deque<AuthVector>> buffers_;
    std::map<SessionId, Imsi> session_imsi_;
    std::map<SessionId, Pending> pending_;
    std::uint64_t vectors_received_ = 0;
    std::uint64_t vectors_consumed_ = 0;
    std::uint64_t vectors_discarded_ = 0;
};

/// Synchronous serving-network side of one authentication: fetches a batch
/// from the home network when the buffer is empty, then issues the request.
std::variant<air::AuthRequest, air::Reject> serving_authenticate(ServingNetwork& sn, HomeNetwork& hn,
                                                                 ServingNetwork::SessionId session,
                                                                 const Imsi& imsi, TimeMs now);

}  // namespace mimsi
