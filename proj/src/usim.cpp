#include "usim.hpp"

#include <algorithm>

#include "random.hpp"

namespace mimsi {

SelectionMode parse_selection_mode(std::string_view text) {
    if (text == "cyclic") return SelectionMode::Cyclic;
    if (text == "pseudorandom") return SelectionMode::PseudoRandom;
    throw std::invalid_argument("unknown selection mode '" + std::string(text) +
                                "' (expected cyclic or pseudorandom)");
}

std::string_view to_string(ImsiChange::Cause cause) {
    switch (cause) {
        case ImsiChange::Cause::Threshold: return "threshold";
        case ImsiChange::Cause::SignalB: return "signal_b";
        case ImsiChange::Cause::SignalC: return "signal_c";
    }
    return "?";
}

Usim::Usim(const UsimPersonalization& p)
    : milenage_(p.key, p.opc),
      stored_sqn_(p.initial_sqn),
      ef_imsi_(p.imsi),
      scheme_(p.scheme),
      predefined_(p.predefined),
      selection_(p.selection),
      selection_seed_(p.selection_seed),
      change_threshold_(p.change_threshold),
      prefix_(p.prefix) {
    if (scheme_ != Scheme::C) {
        if (predefined_.size() < 2) throw std::invalid_argument("predefined IMSI list needs at least 2 entries");
        auto it = std::find(predefined_.begin(), predefined_.end(), ef_imsi_);
        if (it == predefined_.end()) throw std::invalid_argument("initial IMSI is not in the predefined list");
        cursor_ = static_cast<std::size_t>(it - predefined_.begin());
    }
}

CardAuthResult Usim::handle_auth_request(const Block128& rand, const Autn& autn) {
    CardAuthResult result{verify_on_usim(milenage_, stored_sqn_, rand, autn), NoSignal{}, std::nullopt, false};
    auto* accepted = std::get_if<Accepted>(&result.outcome);
    if (accepted == nullptr) return result;

    ++auth_counter_;
    Imsi before = ef_imsi_;
    if (scheme_ == Scheme::A) {
        if (awaiting_first_use_) {
            // The AKA run that follows a change confirms the new IMSI; it
            // does not count towards the next change.
            awaiting_first_use_ = false;
        } else if (change_threshold_ > 0 && ++auths_since_change_ >= change_threshold_) {
            change_imsi(select_next_imsi());
            result.change = ImsiChange{before, ef_imsi_, ImsiChange::Cause::Threshold};
        }
    } else {
        result.signal = detect_signal(milenage_, scheme_, prefix_, ef_imsi_, rand, accepted->received_sqn);
        if (std::holds_alternative<ChangeB>(result.signal)) {
            change_imsi(select_next_imsi());
            result.change = ImsiChange{before, ef_imsi_, ImsiChange::Cause::SignalB};
        } else if (auto* c = std::get_if<ChangeC>(&result.signal)) {
            change_imsi(c->new_imsi);
            result.change = ImsiChange{before, ef_imsi_, ImsiChange::Cause::SignalC};
        }
    }
    result.status_byte = pending_refresh_;
    return result;
}

void Usim::change_imsi(const Imsi& new_imsi) {
    if (scheme_ != Scheme::C) {
        auto it = std::find(predefined_.begin(), predefined_.end(), new_imsi);
        if (it == predefined_.end())
            throw UsimProtocolError("IMSI " + std::string(new_imsi.digits()) + " is not in the predefined list");
        cursor_ = static_cast<std::size_t>(it - predefined_.begin());
    } else if (new_imsi.mcc() != prefix_.mcc || new_imsi.mnc() != prefix_.mnc) {
        throw UsimProtocolError("IMSI " + std::string(new_imsi.digits()) + " has a foreign operator prefix");
    }
    // File first, then the notification.
    ef_imsi_ = new_imsi;
    pending_refresh_ = true;
    fetched_ = false;
    awaiting_first_use_ = true;
    auths_since_change_ = 0;
    ++change_count_;
}

Imsi Usim::select_next_imsi() {
    if (scheme_ == Scheme::C) throw UsimProtocolError("scheme C cards have no predefined list");
    const std::size_t n = predefined_.size();
    if (selection_ == SelectionMode::Cyclic) return predefined_[(cursor_ + 1) % n];
    std::uint64_t draw = splitmix64(selection_seed_ ^ splitmix64(change_count_ + 1));
    std::size_t offset = 1 + static_cast<std::size_t>(draw % (n - 1));
    return predefined_[(cursor_ + offset) % n];
}

void Usim::terminal_profile(const TerminalProfile& profile) { profile_ = profile; }

ProactiveCommand Usim::fetch() {
    if (!pending_refresh_) throw UsimProtocolError("FETCH with no pending proactive command");
    if (!profile_ || !profile_->proactive)
        throw UsimProtocolError("FETCH from an ME that did not declare proactive support");
    fetched_ = true;
    if (profile_->refresh) return {ProactiveCommand::Kind::Refresh, {}};
    return {ProactiveCommand::Kind::DisplayText, "Subscriber identity updated. Please restart your phone."};
}

void Usim::terminal_response() {
    if (!fetched_) throw UsimProtocolError("TERMINAL RESPONSE without a fetched command");
    fetched_ = false;
    pending_refresh_ = false;
}

void Usim::power_cycle() {
    profile_.reset();
    pending_refresh_ = false;
    fetched_ = false;
}

}  // namespace mimsi
