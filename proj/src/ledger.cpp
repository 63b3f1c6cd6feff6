#include "gridtrader/ledger.hpp"

#include <cfenv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <stdexcept>

#include "gridtrader/errors.hpp"

namespace gridtrader {

namespace {

// FNV-1a, 64-bit. Order-sensitive by construction.
struct Fnv1a {
    uint64_t h = 14695981039346656037ULL;

    void bytes(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    }
    void u64(uint64_t v) { bytes(&v, sizeof v); }
    void i64(int64_t v) { bytes(&v, sizeof v); }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
};

int64_t to_micro(double usd, int64_t micro_per_usd) {
    // Round-half-even so settlement amounts are unbiased and reproducible.
    return static_cast<int64_t>(std::nearbyint(usd * static_cast<double>(micro_per_usd)));
}

} // namespace

const char* to_string(TxnOutcome outcome) {
    switch (outcome) {
    case TxnOutcome::Confirmed: return "confirmed";
    case TxnOutcome::AccessDenied: return "access_denied";
    case TxnOutcome::VerificationFailed: return "verification_failed";
    case TxnOutcome::DoubleSpend: return "double_spend";
    case TxnOutcome::InsufficientFunds: return "insufficient_funds";
    }
    return "unknown";
}

Ledger::Ledger(LedgerConfig config, ClockMode mode) : config_(config), mode_(mode) {
    if (config_.round_duration_s <= 0.0) {
        throw std::invalid_argument("ledger: round_duration_s must be positive");
    }
    if (config_.micro_units_per_usd <= 0) {
        throw std::invalid_argument("ledger: micro_units_per_usd must be positive");
    }
    if (!(config_.price_min_usd_per_mwh <= config_.price_max_usd_per_mwh)) {
        throw std::invalid_argument("ledger: price band is inverted");
    }
    wall_start_ = std::chrono::steady_clock::now();
}

const Account& Ledger::register_account(const std::string& account_id) {
    if (account_id.empty()) {
        throw std::invalid_argument("ledger: account id must be non-empty");
    }
    auto [it, inserted] = accounts_.try_emplace(account_id);
    if (!inserted) {
        throw std::invalid_argument("ledger: account '" + account_id + "' already registered");
    }
    it->second.account_id = account_id;
    it->second.balance_micro = to_micro(config_.initial_balance_usd, config_.micro_units_per_usd);
    it->second.registered = true;
    return it->second;
}

bool Ledger::is_registered(const std::string& account_id) const {
    auto it = accounts_.find(account_id);
    return it != accounts_.end() && it->second.registered;
}

const Account& Ledger::account(const std::string& account_id) const {
    auto it = accounts_.find(account_id);
    if (it == accounts_.end()) {
        throw std::invalid_argument("ledger: unknown account '" + account_id + "'");
    }
    return it->second;
}

uint64_t Ledger::submit_settlement(const std::string& sender, const std::string& receiver, int hour,
                                   double price_usd_per_mwh, double quantity_mwh) {
    if (mode_ == ClockMode::WallClock) {
        poll(); // bring current_round_ up to date before stamping
    }
    LedgerTransaction txn;
    txn.txn_id = next_txn_id_++;
    txn.sender = sender;
    txn.receiver = receiver;
    txn.hour = hour;
    txn.price_usd_per_mwh = price_usd_per_mwh;
    txn.quantity_mwh = quantity_mwh;
    txn.first_valid_round = current_round_ + 1;
    txn.submitted_at_s = timestamp_of_round(current_round_);
    transactions_.push_back(txn);
    pool_.push_back(txn.txn_id);
    return txn.txn_id;
}

std::vector<std::pair<uint64_t, TxnOutcome>> Ledger::advance_round() {
    if (mode_ != ClockMode::Simulated) {
        throw std::logic_error("ledger: advance_round requires simulated clock; use poll()");
    }
    ++current_round_;
    return process_pool();
}

std::vector<std::pair<uint64_t, TxnOutcome>> Ledger::poll() {
    if (mode_ != ClockMode::WallClock) {
        throw std::logic_error("ledger: poll requires wall clock; use advance_round()");
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start_).count();
    const auto reached = static_cast<uint64_t>(elapsed / config_.round_duration_s);
    std::vector<std::pair<uint64_t, TxnOutcome>> processed;
    while (current_round_ < reached) {
        ++current_round_;
        auto batch = process_pool();
        processed.insert(processed.end(), batch.begin(), batch.end());
    }
    return processed;
}

std::vector<std::pair<uint64_t, TxnOutcome>> Ledger::process_pool() {
    std::vector<std::pair<uint64_t, TxnOutcome>> processed;
    std::vector<uint64_t> still_pending;
    for (uint64_t id : pool_) {
        LedgerTransaction& txn = transactions_[id - 1];
        const uint64_t due = txn.first_valid_round + config_.extra_confirm_rounds;
        if (current_round_ < due) {
            still_pending.push_back(id);
            continue;
        }
        const TxnOutcome outcome = confirm(txn);
        txn.outcome = outcome;
        txn.confirmed_round = current_round_;
        txn.confirmed_at_s = timestamp_of_round(current_round_);
        processed.emplace_back(id, outcome);
    }
    pool_ = std::move(still_pending);
    return processed;
}

TxnOutcome Ledger::confirm(LedgerTransaction& txn) {
    // All checks run before any mutation so a rejection is a pure no-op.
    if (!is_registered(txn.sender) || !is_registered(txn.receiver)) {
        return TxnOutcome::AccessDenied;
    }
    if (!(txn.price_usd_per_mwh >= config_.price_min_usd_per_mwh &&
          txn.price_usd_per_mwh <= config_.price_max_usd_per_mwh) ||
        !(txn.quantity_mwh > 0.0)) {
        return TxnOutcome::VerificationFailed;
    }
    const auto key = std::make_tuple(txn.hour, txn.sender, txn.receiver);
    if (settled_keys_.count(key) != 0) {
        return TxnOutcome::DoubleSpend;
    }
    const int64_t amount = to_micro(txn.price_usd_per_mwh * txn.quantity_mwh, config_.micro_units_per_usd);
    Account& from = accounts_.at(txn.sender);
    Account& to = accounts_.at(txn.receiver);
    if (from.balance_micro < amount) {
        return TxnOutcome::InsufficientFunds;
    }
    // Atomic settlement: debit, credit, record the trade, publish the price.
    from.balance_micro -= amount;
    to.balance_micro += amount;
    settled_keys_.insert(key);
    GlobalStateEntry entry;
    entry.key = "price_" + std::to_string(txn.hour);
    entry.hour = txn.hour;
    entry.price_usd_per_mwh = txn.price_usd_per_mwh;
    entry.timestamp_s = timestamp_of_round(current_round_);
    entry.writer_txn = txn.txn_id;
    global_state_.push_back(entry);
    return TxnOutcome::Confirmed;
}

const LedgerTransaction& Ledger::transaction(uint64_t txn_id) const {
    if (txn_id == 0 || txn_id > transactions_.size()) {
        throw std::invalid_argument("ledger: unknown transaction id " + std::to_string(txn_id));
    }
    return transactions_[txn_id - 1];
}

double Ledger::transaction_latency(uint64_t txn_id) const {
    const LedgerTransaction& txn = transaction(txn_id);
    if (!txn.confirmed_round.has_value()) {
        throw std::logic_error("ledger: transaction " + std::to_string(txn_id) + " is still pending");
    }
    return timestamp_of_round(*txn.confirmed_round) - timestamp_of_round(txn.first_valid_round);
}

double Ledger::mean_confirmed_latency_s() const {
    double sum = 0.0;
    uint64_t n = 0;
    for (const LedgerTransaction& txn : transactions_) {
        if (txn.outcome == TxnOutcome::Confirmed) {
            sum += timestamp_of_round(*txn.confirmed_round) - timestamp_of_round(txn.first_valid_round);
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double Ledger::throughput_txn_per_s(uint64_t n_submitted, double mean_latency_s) {
    if (n_submitted == 0 || mean_latency_s <= 0.0) {
        return 0.0;
    }
    return static_cast<double>(n_submitted) / mean_latency_s;
}

LedgerReport Ledger::report() const {
    LedgerReport rep;
    rep.n_submitted = transactions_.size();
    for (const LedgerTransaction& txn : transactions_) {
        if (!txn.outcome.has_value()) {
            continue;
        }
        switch (*txn.outcome) {
        case TxnOutcome::Confirmed: ++rep.n_confirmed; break;
        case TxnOutcome::AccessDenied: ++rep.n_access_denied; break;
        case TxnOutcome::VerificationFailed: ++rep.n_verification_failed; break;
        case TxnOutcome::DoubleSpend: ++rep.n_double_spend; break;
        case TxnOutcome::InsufficientFunds: ++rep.n_insufficient_funds; break;
        }
    }
    rep.avg_latency_s = mean_confirmed_latency_s();
    rep.throughput_txn_per_s = throughput_txn_per_s(rep.n_submitted, rep.avg_latency_s);
    return rep;
}

int64_t Ledger::total_balance_micro() const {
    int64_t total = 0;
    for (const auto& [id, acct] : accounts_) {
        total += acct.balance_micro;
    }
    return total;
}

uint64_t Ledger::state_hash() const {
    Fnv1a h;
    h.u64(accounts_.size());
    for (const auto& [id, acct] : accounts_) {
        h.str(id);
        h.i64(acct.balance_micro);
        h.u64(acct.registered ? 1 : 0);
    }
    h.u64(settled_keys_.size());
    for (const auto& [hour, sender, receiver] : settled_keys_) {
        h.i64(hour);
        h.str(sender);
        h.str(receiver);
    }
    h.u64(global_state_.size());
    for (const GlobalStateEntry& e : global_state_) {
        h.str(e.key);
        h.f64(e.price_usd_per_mwh);
        h.f64(e.timestamp_s);
        h.u64(e.writer_txn);
    }
    h.u64(current_round_);
    h.u64(next_txn_id_);
    return h.h;
}

void write_ledger_report(const Ledger& ledger, const std::string& out_dir) {
    write_ledger_report(ledger.report(), ledger.global_state(), out_dir);
}

void write_ledger_report(const LedgerReport& report, const std::vector<GlobalStateEntry>& global_state,
                         const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const fs::path report_path = fs::path(out_dir) / "ledger_report.csv";
    std::FILE* f = std::fopen(report_path.string().c_str(), "wb");
    if (f == nullptr) {
        throw IoError("cannot open '" + report_path.string() + "' for writing");
    }
    std::fprintf(f, "n_submitted,n_confirmed,n_access_denied,n_verification_failed,n_double_spend,"
                    "n_insufficient_funds,avg_latency_s,throughput_txn_per_s\n");
    std::fprintf(f, "%llu,%llu,%llu,%llu,%llu,%llu,%.6f,%.6f\n",
                 static_cast<unsigned long long>(report.n_submitted),
                 static_cast<unsigned long long>(report.n_confirmed),
                 static_cast<unsigned long long>(report.n_access_denied),
                 static_cast<unsigned long long>(report.n_verification_failed),
                 static_cast<unsigned long long>(report.n_double_spend),
                 static_cast<unsigned long long>(report.n_insufficient_funds),
                 report.avg_latency_s, report.throughput_txn_per_s);
    std::fclose(f);

    const fs::path state_path = fs::path(out_dir) / "global_state.csv";
    f = std::fopen(state_path.string().c_str(), "wb");
    if (f == nullptr) {
        throw IoError("cannot open '" + state_path.string() + "' for writing");
    }
    std::fprintf(f, "key,hour,price_usd_per_mwh,timestamp_s,writer_txn\n");
    for (const GlobalStateEntry& e : global_state) {
        std::fprintf(f, "%s,%d,%.6f,%.6f,%llu\n", e.key.c_str(), e.hour, e.price_usd_per_mwh, e.timestamp_s,
                     static_cast<unsigned long long>(e.writer_txn));
    }
    std::fclose(f);
}

} // namespace gridtrader
