#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace gridtrader {

struct Account {
    std::string account_id;
    int64_t balance_micro = 0; // token micro-units, never negative
    bool registered = false;
};

enum class TxnOutcome {
    Confirmed,
    AccessDenied,        // a party is not registered
    VerificationFailed,  // price outside band or quantity not positive
    DoubleSpend,         // trade key (hour, sender, receiver) already settled
    InsufficientFunds,   // debit would push the sender negative
};

const char* to_string(TxnOutcome outcome);

struct LedgerTransaction {
    uint64_t txn_id = 0;
    std::string sender;
    std::string receiver;
    int hour = 0;
    double price_usd_per_mwh = 0.0;
    double quantity_mwh = 0.0;
    uint64_t first_valid_round = 0;
    std::optional<uint64_t> confirmed_round; // empty while pending
    double submitted_at_s = 0.0;
    double confirmed_at_s = 0.0;
    std::optional<TxnOutcome> outcome; // empty while pending
};

// Immutable record of a settled price; the on-chain audit trail.
struct GlobalStateEntry {
    std::string key; // "price_<hour>"
    int hour = 0;
    double price_usd_per_mwh = 0.0;
    double timestamp_s = 0.0;
    uint64_t writer_txn = 0;
};

enum class ClockMode { Simulated, WallClock };

struct LedgerConfig {
    double round_duration_s = 4.0;   // one block per ~4 seconds
    uint64_t extra_confirm_rounds = 0; // delay between first-valid and confirmation
    double initial_balance_usd = 1.0e7;
    double price_min_usd_per_mwh = 1.0;
    double price_max_usd_per_mwh = 1000.0;
    int64_t micro_units_per_usd = 1000000;
};

struct LedgerReport {
    uint64_t n_submitted = 0;
    uint64_t n_confirmed = 0;
    uint64_t n_access_denied = 0;
    uint64_t n_verification_failed = 0;
    uint64_t n_double_spend = 0;
    uint64_t n_insufficient_funds = 0;
    double avg_latency_s = 0.0;
    double throughput_txn_per_s = 0.0;
};

// Round-based settlement ledger. Submissions queue into a pool; producing a
// round verifies and settles every eligible transaction in submission order.
// A rejected transaction mutates nothing. All confirmed history and global
// state are append-only.
class Ledger {
public:
    explicit Ledger(LedgerConfig config = {}, ClockMode mode = ClockMode::Simulated);

    // Throws std::invalid_argument if the id is already registered.
    const Account& register_account(const std::string& account_id);

    bool is_registered(const std::string& account_id) const;
    const Account& account(const std::string& account_id) const;

    // Enters the pool with first_valid_round = current_round + 1. Failures
    // surface as outcomes at confirmation time, never here.
    uint64_t submit_settlement(const std::string& sender, const std::string& receiver, int hour,
                               double price_usd_per_mwh, double quantity_mwh);

    // Simulated mode only: produce the next round and process the pool.
    std::vector<std::pair<uint64_t, TxnOutcome>> advance_round();

    // WallClock mode: advance to whatever round real time has reached.
    std::vector<std::pair<uint64_t, TxnOutcome>> poll();

    uint64_t current_round() const { return current_round_; }
    size_t pending_count() const { return pool_.size(); }
    double timestamp_of_round(uint64_t round) const { return static_cast<double>(round) * config_.round_duration_s; }

    const LedgerTransaction& transaction(uint64_t txn_id) const;

    // Seconds between the confirmed round and the first valid round.
    // Throws std::logic_error for a still-pending transaction.
    double transaction_latency(uint64_t txn_id) const;

    double mean_confirmed_latency_s() const;

    // n_submitted / mean latency; zero for an empty set.
    static double throughput_txn_per_s(uint64_t n_submitted, double mean_latency_s);

    LedgerReport report() const;

    const std::vector<GlobalStateEntry>& global_state() const { return global_state_; }
    const std::vector<LedgerTransaction>& transactions() const { return transactions_; }
    const std::map<std::string, Account>& accounts() const { return accounts_; }

    int64_t total_balance_micro() const;

    // Order-sensitive digest of balances, settled keys, global state, and
    // counters. Equal hashes before/after a rejected transaction demonstrate
    // that the rejection mutated nothing.
    uint64_t state_hash() const;

    const LedgerConfig& config() const { return config_; }

private:
    std::vector<std::pair<uint64_t, TxnOutcome>> process_pool();
    TxnOutcome confirm(LedgerTransaction& txn);

    LedgerConfig config_;
    ClockMode mode_;
    uint64_t current_round_ = 0;
    uint64_t next_txn_id_ = 1;
    std::map<std::string, Account> accounts_;
    std::vector<LedgerTransaction> transactions_; // full submission history, indexed by txn_id - 1
    std::vector<uint64_t> pool_;                  // pending txn ids in submission order
    std::set<std::tuple<int, std::string, std::string>> settled_keys_;
    std::vector<GlobalStateEntry> global_state_;
    std::chrono::steady_clock::time_point wall_start_;
};

// Writes ledger_report.csv and global_state.csv into out_dir.
void write_ledger_report(const Ledger& ledger, const std::string& out_dir);
void write_ledger_report(const LedgerReport& report, const std::vector<GlobalStateEntry>& global_state,
                         const std::string& out_dir);

} // namespace gridtrader
