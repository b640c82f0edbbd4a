#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aka.hpp"
#include "identity.hpp"

namespace mimsi {

class UsimProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class SelectionMode { Cyclic, PseudoRandom };

SelectionMode parse_selection_mode(std::string_view text);

struct UsimPersonalization {
    SubscriberKey key;
    Block128 opc{};
    Sqn initial_sqn;
    Scheme scheme = Scheme::C;
    Imsi imsi;
    std::vector<Imsi> predefined;
    SelectionMode selection = SelectionMode::Cyclic;
    std::uint64_t selection_seed = 0;
    std::uint32_t change_threshold = 0;  // scheme A; 0 disables
    OperatorPrefix prefix;
};

/// What the ME announced in TERMINAL PROFILE.
struct TerminalProfile {
    bool proactive = true;
    bool refresh = true;
};

struct ProactiveCommand {
    enum class Kind { Refresh, DisplayText };
    Kind kind = Kind::Refresh;
    std::string text;
};

struct ImsiChange {
    enum class Cause { Threshold, SignalB, SignalC };
    Imsi from;
    Imsi to;
    Cause cause;
};

std::string_view to_string(ImsiChange::Cause cause);

struct CardAuthResult {
    AkaOutcome outcome;
    SignalResult signal;
    std::optional<ImsiChange> change;
    bool status_byte = false;  // a proactive command is waiting for FETCH
};

/// Card-side state: EF_IMSI, SQN, the predefined list and the proactive
/// session. One ME drives a card; calls are strictly sequential.
class Usim {
public:
    explicit Usim(const UsimPersonalization& p);

    CardAuthResult handle_auth_request(const Block128& rand, const Autn& autn);

    /// Writes EF_IMSI and queues the notification for the ME.
    void change_imsi(const Imsi& new_imsi);
    Imsi select_next_imsi();

    void terminal_profile(const TerminalProfile& profile);
    ProactiveCommand fetch();
    void terminal_response();

    /// Volatile session state is lost; EF_IMSI, SQN and counters survive.
    void power_cycle();

    const Imsi& read_ef_imsi() const { return ef_imsi_; }
    bool pending_refresh() const { return pending_refresh_; }
    Sqn stored_sqn() const { return stored_sqn_; }
    std::uint64_t auth_counter() const { return auth_counter_; }
    std::size_t list_cursor() const { return cursor_; }
    Scheme scheme() const { return scheme_; }
    const std::vector<Imsi>& predefined() const { return predefined_; }
    std::uint64_t change_count() const { return change_count_; }

private:
    Milenage milenage_;
    Sqn stored_sqn_;
    Imsi ef_imsi_;
    Scheme scheme_;
    std::vector<Imsi> predefined_;
    std::size_t cursor_ = 0;
    SelectionMode selection_;
    std::uint64_t selection_seed_;
    std::uint32_t change_threshold_;
    OperatorPrefix prefix_;

    std::uint64_t auth_counter_ = 0;
    std::uint32_t auths_since_change_ = 0;
    bool awaiting_first_use_ = false;
    std::uint64_t change_count_ = 0;

    bool pending_refresh_ = false;
    std::optional<TerminalProfile> profile_;
    bool fetched_ = false;
};

}  // namespace mimsi
