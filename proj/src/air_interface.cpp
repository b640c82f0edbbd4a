#include "air_interface.hpp"

#include <stdexcept>

#include "random.hpp"

namespace mimsi {

std::string_view message_name(const AirMessage& message) {
    struct Visitor {
        std::string_view operator()(const air::AttachWithImsi&) const { return "attach_imsi"; }
        std::string_view operator()(const air::AttachWithTmsi&) const { return "attach_tmsi"; }
        std::string_view operator()(const air::IdentityRequest&) const { return "identity_request"; }
        std::string_view operator()(const air::IdentityResponse&) const { return "identity_response"; }
        std::string_view operator()(const air::AuthRequest&) const { return "auth_request"; }
        std::string_view operator()(const air::AuthResponse&) const { return "auth_response"; }
        std::string_view operator()(const air::AuthFailure&) const { return "auth_failure"; }
        std::string_view operator()(const air::TmsiReallocate&) const { return "tmsi_reallocate"; }
        std::string_view operator()(const air::Reject&) const { return "reject"; }
    };
    return std::visit(Visitor{}, message);
}

std::string_view to_string(air::Reject::Cause cause) {
    switch (cause) {
        case air::Reject::Cause::UnknownSubscriber: return "unknown_subscriber";
        case air::Reject::Cause::AuthenticationFailed: return "authentication_failed";
        case air::Reject::Cause::NetworkFailure: return "network_failure";
    }
    return "?";
}

std::optional<Imsi> cleartext_imsi(const AirMessage& message) {
    if (auto* a = std::get_if<air::AttachWithImsi>(&message)) return a->imsi;
    if (auto* r = std::get_if<air::IdentityResponse>(&message)) return r->imsi;
    return std::nullopt;
}

AirMessage me_power_on(MeState& me, Usim& usim) {
    if (me.powered) throw std::logic_error("ME is already powered on");
    me.powered = true;
    usim.terminal_profile({me.proactive_support, me.refresh_capable});
    const Imsi& imsi = usim.read_ef_imsi();
    if (me.known_imsi != imsi) me.tmsi.reset();  // identity changed while off
    me.known_imsi = imsi;
    if (me.tmsi && me.camped_network && me.tmsi->network == *me.camped_network)
        return air::AttachWithTmsi{*me.tmsi};
    return air::AttachWithImsi{imsi};
}

void me_power_off(MeState& me, Usim& usim) {
    me.powered = false;
    usim.power_cycle();
}

void me_camp(MeState& me, const NetworkId& network) {
    me.camped_network = network;
    if (me.tmsi && me.tmsi->network != network) me.tmsi.reset();
}

AirMessage me_attach(const MeState& me) {
    if (!me.powered || !me.known_imsi) throw std::logic_error("ME is not powered on");
    if (me.tmsi && me.camped_network && me.tmsi->network == *me.camped_network)
        return air::AttachWithTmsi{*me.tmsi};
    return air::AttachWithImsi{*me.known_imsi};
}

air::IdentityResponse me_identity_response(const MeState& me) {
    if (!me.known_imsi) throw std::logic_error("ME has not read EF_IMSI");
    return {*me.known_imsi};
}

MeAuthResult me_authenticate(MeState& /*me*/, Usim& usim, const air::AuthRequest& request) {
    auto card = usim.handle_auth_request(request.rand, request.autn);
    if (auto* ok = std::get_if<Accepted>(&card.outcome)) return {air::AuthResponse{ok->res}, std::move(card)};
    auto cause = std::holds_alternative<MacFailure>(card.outcome) ? air::AuthFailure::Cause::MacFailure
                                                                   : air::AuthFailure::Cause::SynchFailure;
    return {air::AuthFailure{cause}, std::move(card)};
}

void me_accept_tmsi(MeState& me, const Tmsi& tmsi) { me.tmsi = tmsi; }

std::optional<ProactiveAction> me_handle_proactive(MeState& me, Usim& usim) {
    if (!me.proactive_support || !usim.pending_refresh()) return std::nullopt;
    auto command = usim.fetch();
    usim.terminal_response();
    if (command.kind == ProactiveCommand::Kind::Refresh) {
        me.known_imsi = usim.read_ef_imsi();
        me.tmsi.reset();
        return ProactiveAction{ProactiveAction::Kind::Reattach, AirMessage{air::AttachWithImsi{*me.known_imsi}}};
    }
    return ProactiveAction{ProactiveAction::Kind::UserRestart, std::nullopt};
}

ServingNetwork::ServingNetwork(NetworkId id, std::size_t batch_size, std::uint64_t tmsi_key)
    : id_(std::move(id)), batch_size_(batch_size), tmsi_key_(tmsi_key) {
    if (batch_size_ == 0) throw std::invalid_argument("batch size must be at least 1");
}

std::uint32_t ServingNetwork::next_tmsi_value() {
    // Keyed 4-round Feistel over the allocation counter: a permutation of the
    // 32-bit space, so values never repeat within one network.
    for (;;) {
        auto x = static_cast<std::uint32_t>(tmsi_counter_++);
        std::uint16_t left = static_cast<std::uint16_t>(x >> 16);
        std::uint16_t right = static_cast<std::uint16_t>(x);
        for (std::uint64_t round = 0; round < 4; ++round) {
            auto f = static_cast<std::uint16_t>(splitmix64(tmsi_key_ ^ (round << 32) ^ right));
            std::uint16_t next = static_cast<std::uint16_t>(left ^ f);
            left = right;
            right = next;
        }
        std::uint32_t value = (std::uint32_t{left} << 16) | right;
        if (value != 0xFFFFFFFFu) return value;
    }
}

std::optional<Imsi> ServingNetwork::resolve_tmsi(std::uint32_t tmsi) const {
    auto it = tmsi_table_.find(tmsi);
    if (it == tmsi_table_.end()) return std::nullopt;
    return it->second;
}

bool ServingNetwork::simulate_identity_loss(std::uint32_t tmsi) { return tmsi_table_.erase(tmsi) > 0; }

std::vector<std::uint32_t> ServingNetwork::tmsis() const {
    std::vector<std::uint32_t> out;
    out.reserve(tmsi_table_.size());
    for (const auto& [t, _] : tmsi_table_) out.push_back(t);
    return out;
}

void ServingNetwork::note_session_imsi(SessionId session, const Imsi& imsi) {
    auto it = session_imsi_.find(session);
    if (it != session_imsi_.end() && it->second != imsi) discard_vectors(it->second);
    session_imsi_.insert_or_assign(session, imsi);
}

bool ServingNetwork::has_vector(const Imsi& imsi) const { return buffered(imsi) > 0; }

std::size_t ServingNetwork::buffered(const Imsi& imsi) const {
    auto it = buffers_.find(imsi);
    return it == buffers_.end() ? 0 : it->second.size();
}

void ServingNetwork::store_vectors(const Imsi& imsi, std::vector<AuthVector> vectors) {
    vectors_received_ += vectors.size();
    auto& q = buffers_[imsi];
    for (auto& v : vectors) q.push_back(std::move(v));
}

std::size_t ServingNetwork::discard_vectors(const Imsi& imsi) {
    auto it = buffers_.find(imsi);
    if (it == buffers_.end()) return 0;
    std::size_t n = it->second.size();
    vectors_discarded_ += n;
    buffers_.erase(it);
    return n;
}

air::AuthRequest ServingNetwork::start_authentication(SessionId session, const Imsi& imsi) {
    auto it = buffers_.find(imsi);
    if (it == buffers_.end() || it->second.empty()) throw std::logic_error("no buffered vector for IMSI");
    AuthVector v = std::move(it->second.front());
    it->second.pop_front();
    if (it->second.empty()) buffers_.erase(it);
    ++vectors_consumed_;
    air::AuthRequest request{v.rand, v.autn};
    pending_.insert_or_assign(session, Pending{imsi, std::move(v)});
    return request;
}

const AuthVector* ServingNetwork::pending_vector(SessionId session) const {
    auto it = pending_.find(session);
    return it == pending_.end() ? nullptr : &it->second.vector;
}

std::variant<air::TmsiReallocate, air::Reject> ServingNetwork::finish_authentication(
    SessionId session, const air::AuthResponse& response) {
    auto it = pending_.find(session);
    if (it == pending_.end()) return air::Reject{air::Reject::Cause::NetworkFailure};
    Pending p = std::move(it->second);
    pending_.erase(it);
    if (response.res != p.vector.xres) return air::Reject{air::Reject::Cause::AuthenticationFailed};

    // One TMSI per IMSI at a time.
    for (auto t = tmsi_table_.begin(); t != tmsi_table_.end();) {
        if (t->second == p.imsi)
            t = tmsi_table_.erase(t);
        else
            ++t;
    }
    Tmsi tmsi{next_tmsi_value(), id_};
    tmsi_table_.emplace(tmsi.value, p.imsi);
    return air::TmsiReallocate{tmsi};
}

void ServingNetwork::abandon_authentication(SessionId session) { pending_.erase(session); }

std::variant<air::AuthRequest, air::Reject> serving_authenticate(ServingNetwork& sn, HomeNetwork& hn,
                                                                 ServingNetwork::SessionId session,
                                                                 const Imsi& imsi, TimeMs now) {
    sn.note_session_imsi(session, imsi);
    if (!sn.has_vector(imsi)) {
        try {
            auto batch = hn.request_vectors(imsi, sn.batch_size(), now);
            sn.store_vectors(imsi, std::move(batch.vectors));
        } catch (const HomeNetworkError& e) {
            if (e.kind() == HomeNetworkError::Kind::NotFound)
                return air::Reject{air::Reject::Cause::UnknownSubscriber};
            return air::Reject{air::Reject::Cause::NetworkFailure};
        }
    }
    return sn.start_authentication(session, imsi);
}

}  // namespace mimsi
