#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bpec/harness.hpp"

namespace {

using namespace bpec;

RegionFlavor parse_flavor(const std::string& name) {
    if (name == "noFB") return RegionFlavor::no_feedback;
    if (name == "outer") return RegionFlavor::outer;
    if (name == "code1_pub") return RegionFlavor::code1_pub;
    if (name == "code1_pri") return RegionFlavor::code1_pri;
    if (name == "D") return RegionFlavor::ordered_budget;
    if (name == "ord") return RegionFlavor::ordered;
    if (name == "fair") return RegionFlavor::fair;
    throw ConfigError("unknown region flavor '" + name + "'");
}

std::string size_list(const std::vector<int>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out + "]";
}

std::string order_list(const std::vector<int>& order) {
    std::string out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i) out += ">";
        out += std::to_string(order[i]);
    }
    return out;
}

int cmd_simulate(const ExperimentConfig& cfg) {
    const ExperimentRecord rec = run_experiment(cfg);
    const Aggregates& agg = rec.aggregates;
    std::printf("%s, %d users, sizes %s, %d trials\n",
                variant_name(cfg.variant).c_str(), cfg.users,
                size_list(rec.sizes).c_str(), cfg.trials);
    if (rec.has_forecast)
        std::printf("forecast info slots  %.3f\n", rec.forecast_slots);
    std::printf("mean info slots      %.3f (ci95 %.3f)\n", agg.mean_info_slots,
                agg.ci95_info_slots);
    std::printf("mean total slots     %.3f\n", agg.mean_total_slots);
    if (variant_private(cfg.variant))
        std::printf("mean feedback packets %.2f\n", agg.mean_feedback_packets);
    std::printf("deadline-miss rate   %.4f\n", agg.error_rate);
    std::printf("decode rate          %.4f\n", agg.decode_rate);
    if (agg.incomplete_trials > 0)
        std::printf("incomplete trials    %d\n", agg.incomplete_trials);
    if (!cfg.output.empty())
        std::printf("wrote %s.json and %s.csv\n",
                    output_path(cfg.output).c_str(),
                    output_path(cfg.output).c_str());

    bool decode_failed = false;
    for (const TrialResult& tr : rec.trials)
        for (auto d : tr.decoded)
            if (tr.payload_checked && d == 0) decode_failed = true;
    if (decode_failed || agg.incomplete_trials > 0) return 2;
    return 0;
}

int cmd_region(const ExperimentConfig& cfg, const std::string& flavor_name,
               double budget) {
    if (cfg.rates.empty())
        throw ConfigError("region queries need a config in rate mode");
    const ChannelModel model = build_channel(cfg.channel, cfg.users);
    const RegionFlavor flavor = parse_flavor(flavor_name);
    const RegionVerdict v = region_membership(model, cfg.rates, budget, flavor);
    std::printf("flavor %s: %s, margin %.9g, binding %s\n", flavor_name.c_str(),
                v.member ? "member" : "outside", v.margin,
                v.binding_constraint.c_str());
    if (!v.order.empty())
        std::printf("witness order %s\n", order_list(v.order).c_str());
    return 0;
}

int cmd_golden(const std::string& trace, bool verbose) {
    const GoldenReport report = replay_golden(trace);
    for (const GoldenCheck& c : report.checks)
        if (!c.pass || verbose)
            std::printf("slot %ld %-24s %s %s\n", c.slot, c.what.c_str(),
                        c.pass ? "ok" : "DIVERGED", c.detail.c_str());
    std::printf("%s: %zu checks over %ld slots: %s\n", trace.c_str(),
                report.checks.size(), report.slots,
                report.pass ? "PASS" : "FAIL");
    if (!report.pass) {
        std::printf("first divergence at slot %ld\n", report.first_divergence);
        return 3;
    }
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& scales) {
    const SweepResult sw = sweep_boundary(cfg, scales);
    std::printf("boundary rate scale %.6f\n", sw.boundary_scale);
    for (const SweepPoint& p : sw.points)
        std::printf("scale %.3f sizes %s deadline-miss %.4f mean slots %.1f\n",
                    p.scale, size_list(p.sizes).c_str(), p.error_rate,
                    p.mean_info_slots);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feedback-coded broadcast erasure simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string algorithm, output, flavor = "outer", trace = "walkthrough";
    int trials = -1, blocklength = -1;
    long slot_cap = -1;
    std::uint64_t seed = 0;
    bool have_seed = false, counts = false, invariants = false, verbose = false;
    double budget = 1.0;
    std::vector<double> scales{0.9, 0.95, 1.0, 1.05, 1.1};

    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "JSON config file")
            ->required();
    };

    CLI::App* sim = app.add_subcommand("simulate", "run Monte Carlo trials");
    add_config(sim);
    sim->add_option("--trials", trials, "override trial count");
    sim->add_option("--seed", seed, "override master seed")
        ->each([&](const std::string&) { have_seed = true; });
    sim->add_option("--algorithm", algorithm,
                    "override variant (code1_pub, code1_pri, code2_pub, code2_pri)");
    sim->add_option("--output", output, "override output base path");
    sim->add_option("--blocklength", blocklength, "override deadline in slots");
    sim->add_option("--slot-cap", slot_cap, "override the hard slot cap");
    sim->add_flag("--counts", counts, "skip payloads and decoding");
    sim->add_flag("--check-invariants", invariants, "verify state every slot");

    CLI::App* reg = app.add_subcommand("region", "analytic rate-region verdict");
    add_config(reg);
    reg->add_option("--flavor", flavor,
                    "noFB, outer, code1_pub, code1_pri, D, ord or fair");
    reg->add_option("--budget", budget, "packet budget for budget flavors");

    CLI::App* gold = app.add_subcommand("golden", "replay the bundled trace");
    gold->add_option("--trace", trace, "trace name");
    gold->add_flag("-v,--verbose", verbose, "print passing checks too");

    CLI::App* swp = app.add_subcommand("sweep", "scale rates across the boundary");
    add_config(swp);
    swp->add_option("--scales", scales, "rate multipliers")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (gold->parsed()) return cmd_golden(trace, verbose);

        ExperimentConfig cfg = load_config(config_path);
        if (trials >= 0) cfg.trials = trials;
        if (have_seed) cfg.seed = seed;
        if (!algorithm.empty()) cfg.variant = parse_variant(algorithm);
        if (!output.empty()) cfg.output = output;
        if (blocklength >= 0) cfg.blocklength = blocklength;
        if (slot_cap >= 0) cfg.slot_cap = slot_cap;
        if (counts) cfg.counts_only = true;
        if (invariants) cfg.check_invariants = true;

        if (sim->parsed()) return cmd_simulate(cfg);
        if (reg->parsed()) return cmd_region(cfg, flavor, budget);
        if (swp->parsed()) return cmd_sweep(cfg, scales);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
