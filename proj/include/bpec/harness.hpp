#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpec/analytics.hpp"
#include "bpec/channel.hpp"
#include "bpec/encoder_code1.hpp"

namespace bpec {

// Which code runs and whether feedback rides in-band as packetized logs.
enum class Variant { code1_pub, code1_pri, code2_pub, code2_pri };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);
Algorithm variant_algorithm(Variant v);
bool variant_private(Variant v);

struct ChannelSpec {
    std::string kind;  // "symmetric", "iid", "independent" or "joint"
    std::vector<double> values;
};

ChannelModel build_channel(const ChannelSpec& spec, int users);

struct ExperimentConfig {
    int users = 0;
    std::vector<int> sizes;  // explicit session sizes, or rates * blocklength
    RateVector rates;
    int blocklength = 0;  // deadline in slots; required with rates
    int field_exponent = 4;
    int payload_symbols = 2;
    ChannelSpec channel;
    Variant variant = Variant::code1_pub;
    int trials = 1;
    std::uint64_t seed = 1;
    long slot_cap = 0;  // hard per-trial abort, 0 = unbounded
    bool counts_only = false;  // skip payloads, receivers and decoding
    bool check_invariants = false;
    std::string output;  // base path for .json/.csv; empty writes nothing
};

// JSON round trip. parse_config rejects unknown keys; absent keys keep the
// defaults above. Throws ConfigError with the offending key in the message.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_json(const ExperimentConfig& cfg);

void validate_config(const ExperimentConfig& cfg);
std::vector<int> resolve_sizes(const ExperimentConfig& cfg);

struct QueueSlotRow {
    mask_t queue = 0;
    int stage = 0;
    long slots = 0;
};

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    bool completed = false;
    long info_slots = 0;
    long total_slots = 0;  // info plus multicast slots for private variants
    int feedback_packets = 0;
    long feedback_slots = 0;
    long t2_slot = -1;
    bool deadline_missed = false;
    bool payload_checked = false;
    std::vector<std::uint8_t> decoded;  // per user; filled when payload_checked
    std::vector<QueueSlotRow> queues;
};

struct Aggregates {
    double mean_info_slots = 0;
    double stddev_info_slots = 0;
    double ci95_info_slots = 0;
    double mean_total_slots = 0;
    double mean_feedback_packets = 0;
    double slots_per_packet = 0;
    double error_rate = 0;   // deadline misses over trials
    double decode_rate = 0;  // decode successes over users * checked trials
    int incomplete_trials = 0;
};

struct ExperimentRecord {
    ExperimentConfig config;
    std::vector<int> sizes;
    bool has_forecast = false;
    double forecast_slots = 0;  // expected information slots for these sizes
    std::vector<TrialResult> trials;
    Aggregates aggregates;
};

// Runs cfg.trials independent trials. Trial t derives every stream it needs
// from child_seed(cfg.seed, t): channel patterns from child 1, recipe draws
// from child 2, payload symbols from child 3, so extending the trial count
// never perturbs earlier trials. Trials run on a small worker pool and are
// aggregated in index order, making the record reproducible bit for bit.
ExperimentRecord run_experiment(const ExperimentConfig& cfg);

std::string record_json(const ExperimentRecord& rec);
std::string record_csv(const ExperimentRecord& rec);

// Joins a relative path onto $BPEC_OUTPUT_DIR when the variable is set.
std::string output_path(const std::string& name);
// Writes <output>.json and <output>.csv; no-op when cfg.output is empty.
void write_outputs(const ExperimentRecord& rec);

struct SweepPoint {
    double scale = 0;
    std::vector<int> sizes;
    double error_rate = 0;
    double mean_info_slots = 0;
};

struct SweepResult {
    double boundary_scale = 0;  // rate multiplier that lands on the boundary
    std::vector<SweepPoint> points;
};

// Scales the configured rate ray across the analytic boundary and records
// the deadline-miss rate at each point. Base config must use rates.
SweepResult sweep_boundary(const ExperimentConfig& base,
                           const std::vector<double>& scales);

struct GoldenCheck {
    long slot = 0;
    std::string what;
    bool pass = false;
    std::string detail;
};

struct GoldenReport {
    bool pass = false;
    long first_divergence = -1;
    long slots = 0;
    std::vector<GoldenCheck> checks;
};

// Replays the bundled hand-worked trace ("walkthrough": three users, ten
// packets each, a fixed 47-slot erasure script) and diffs queue contents,
// index values and basis spans per phase against the stored fixture.
GoldenReport replay_golden(const std::string& name = "walkthrough");

}  // namespace bpec
