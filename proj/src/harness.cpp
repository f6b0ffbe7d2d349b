#include "bpec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bpec/decoder.hpp"
#include "bpec/errors.hpp"
#include "bpec/overhead.hpp"
#include "bpec/rng.hpp"
#include "bpec/subset.hpp"

using nlohmann::json;

namespace bpec {

Variant parse_variant(const std::string& name) {
    if (name == "code1_pub") return Variant::code1_pub;
    if (name == "code1_pri") return Variant::code1_pri;
    if (name == "code2_pub") return Variant::code2_pub;
    if (name == "code2_pri") return Variant::code2_pri;
    throw ConfigError("unknown algorithm '" + name + "'");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::code1_pub: return "code1_pub";
        case Variant::code1_pri: return "code1_pri";
        case Variant::code2_pub: return "code2_pub";
        case Variant::code2_pri: return "code2_pri";
    }
    return "?";
}

Algorithm variant_algorithm(Variant v) {
    return (v == Variant::code2_pub || v == Variant::code2_pri)
               ? Algorithm::code2
               : Algorithm::code1;
}

bool variant_private(Variant v) {
    return v == Variant::code1_pri || v == Variant::code2_pri;
}

ChannelModel build_channel(const ChannelSpec& spec, int users) {
    if (spec.kind == "symmetric") return ChannelModel::symmetric(users, spec.values);
    if (spec.kind == "independent")
        return ChannelModel::independent(users, spec.values);
    if (spec.kind == "iid") {
        if (spec.values.size() != 1)
            throw ConfigError("iid channel takes exactly one value");
        return ChannelModel::iid(users, spec.values[0]);
    }
    if (spec.kind == "joint") {
        std::vector<double> probs = spec.values;
        return ChannelModel::joint(users, std::move(probs));
    }
    throw ConfigError("unknown channel kind '" + spec.kind + "'");
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

std::vector<std::vector<PacketVector>> random_sessions(
    const Gf& gf, const std::vector<int>& sizes, int packet_len,
    SplitMix64& rng) {
    std::vector<std::vector<PacketVector>> sessions;
    sessions.reserve(sizes.size());
    for (int count : sizes) {
        std::vector<PacketVector> s;
        s.reserve(std::size_t(count));
        for (int p = 0; p < count; ++p) {
            PacketVector v(static_cast<std::size_t>(packet_len));
            for (auto& x : v) x = rng.field_element(gf.m());
            s.push_back(std::move(v));
        }
        sessions.push_back(std::move(s));
    }
    return sessions;
}

TrialResult run_trial(const ExperimentConfig& cfg, const ChannelModel& model,
                      const std::vector<int>& sizes, int t) {
    TrialResult res;
    res.trial = t;
    res.seed = child_seed(cfg.seed, std::uint64_t(t));

    const Gf& gf = Gf::get(cfg.field_exponent);
    const Algorithm alg = variant_algorithm(cfg.variant);
    const bool priv = variant_private(cfg.variant);
    const int n = cfg.users;
    const int l_bits = cfg.payload_symbols * cfg.field_exponent;

    EncoderOptions opts;
    opts.check_invariants = cfg.check_invariants;
    opts.slot_cap = cfg.slot_cap > 0 ? cfg.slot_cap : -1;

    PatternStream stream(model, child_seed(res.seed, 1));

    std::vector<std::vector<PacketVector>> sessions;
    QueueNetwork net = [&] {
        if (cfg.counts_only) return QueueNetwork::initialize_counts(gf, sizes);
        SplitMix64 payload_rng(child_seed(res.seed, 3));
        sessions = random_sessions(gf, sizes, cfg.payload_symbols, payload_rng);
        return QueueNetwork::initialize(gf, sessions);
    }();
    Encoder enc(std::move(net), child_seed(res.seed, 2), alg, opts);

    FeedbackLog log;
    std::vector<std::vector<Frame>> fifos(static_cast<std::size_t>(n));
    std::vector<std::vector<std::uint8_t>> own_fb(static_cast<std::size_t>(n));
    std::vector<std::unique_ptr<Receiver>> rx;
    const bool replay_pub = !cfg.counts_only && !priv;
    if (replay_pub)
        for (int u = 1; u <= n; ++u)
            rx.push_back(std::make_unique<Receiver>(u, gf, sizes,
                                                    cfg.payload_symbols,
                                                    child_seed(res.seed, 2), alg));

    while (!enc.done()) {
        if (cfg.slot_cap > 0 && enc.slots_used() >= cfg.slot_cap) break;
        PacketVector sent;
        if (!cfg.counts_only) sent = enc.pending().payload;
        const ErasurePattern pat = stream.next();
        enc.step(pat.erased);
        const mask_t got = pat.receivers(n);
        if (priv) {
            log.push_back(got);
            if (!cfg.counts_only)
                for (int u = 1; u <= n; ++u) {
                    const bool heard = has_user(got, u);
                    own_fb[std::size_t(u - 1)].push_back(heard ? 1 : 0);
                    if (heard)
                        fifos[std::size_t(u - 1)].push_back(Frame{false, {}, sent});
                }
        } else if (replay_pub) {
            for (int u = 1; u <= n; ++u)
                rx[std::size_t(u - 1)]->replay_slot(
                    pat, has_user(got, u) ? &sent : nullptr);
        }
    }

    const RunStats& st = enc.stats();
    res.completed = st.completed;
    res.info_slots = enc.slots_used();
    res.total_slots = res.info_slots;
    res.t2_slot = st.t2_slot;
    res.queues.reserve(st.queues.size());
    for (const QueueStats& qs : st.queues)
        res.queues.push_back(QueueSlotRow{qs.queue, qs.stage, qs.slots});

    if (priv && st.completed) {
        auto packets = packetize_log(log, l_bits, n);
        res.feedback_packets = int(packets.size());
        MulticastResult mc = multicast_until_all(packets, n, stream, l_bits);
        res.feedback_slots = mc.slots;
        res.total_slots += mc.slots;
        if (!cfg.counts_only) {
            res.payload_checked = true;
            res.decoded.assign(std::size_t(n), 0);
            for (int u = 1; u <= n; ++u) {
                auto& fifo = fifos[std::size_t(u - 1)];
                for (const Frame& f : mc.received[std::size_t(u - 1)])
                    fifo.push_back(f);
                try {
                    auto out = decode_private(u, gf, sizes, cfg.payload_symbols,
                                              child_seed(res.seed, 2), alg, fifo,
                                              own_fb[std::size_t(u - 1)]);
                    res.decoded[std::size_t(u - 1)] =
                        out.packets == sessions[std::size_t(u - 1)] ? 1 : 0;
                } catch (const std::runtime_error&) {
                    res.decoded[std::size_t(u - 1)] = 0;
                }
            }
        }
    } else if (replay_pub && st.completed) {
        res.payload_checked = true;
        res.decoded.assign(std::size_t(n), 0);
        for (int u = 1; u <= n; ++u) {
            try {
                res.decoded[std::size_t(u - 1)] =
                    rx[std::size_t(u - 1)]->decode() == sessions[std::size_t(u - 1)]
                        ? 1
                        : 0;
            } catch (const std::runtime_error&) {
                res.decoded[std::size_t(u - 1)] = 0;
            }
        }
    }

    const long relevant = priv ? res.total_slots : res.info_slots;
    res.deadline_missed = cfg.blocklength > 0 && relevant > cfg.blocklength;
    return res;
}

Aggregates aggregate(const ExperimentConfig& cfg,
                     const std::vector<TrialResult>& trials,
                     const std::vector<int>& sizes) {
    Aggregates a;
    if (trials.empty()) return a;
    const double count = double(trials.size());
    long packets_total = 0;
    for (int s : sizes) packets_total += s;

    double info_sum = 0, total_sum = 0, fb_sum = 0;
    long misses = 0, checked = 0, successes = 0;
    for (const TrialResult& tr : trials) {
        info_sum += double(tr.info_slots);
        total_sum += double(tr.total_slots);
        fb_sum += double(tr.feedback_packets);
        if (tr.deadline_missed) ++misses;
        if (!tr.completed) ++a.incomplete_trials;
        if (tr.payload_checked) {
            checked += long(tr.decoded.size());
            for (auto d : tr.decoded) successes += d;
        }
    }
    a.mean_info_slots = info_sum / count;
    a.mean_total_slots = total_sum / count;
    a.mean_feedback_packets = fb_sum / count;
    a.error_rate = double(misses) / count;
    if (packets_total > 0) a.slots_per_packet = a.mean_info_slots / double(packets_total);
    if (checked > 0) a.decode_rate = double(successes) / double(checked);

    if (trials.size() > 1) {
        double ss = 0;
        for (const TrialResult& tr : trials) {
            const double d = double(tr.info_slots) - a.mean_info_slots;
            ss += d * d;
        }
        a.stddev_info_slots = std::sqrt(ss / (count - 1.0));
        a.ci95_info_slots = 1.96 * a.stddev_info_slots / std::sqrt(count);
    }
    (void)cfg;
    return a;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown_keys(j,
                        {"users", "sizes", "rates", "blocklength",
                         "field_exponent", "payload_symbols", "channel",
                         "algorithm", "trials", "seed", "slot_cap",
                         "counts_only", "check_invariants", "output"},
                        "config");
    ExperimentConfig cfg;
    try {
        cfg.users = j.value("users", 0);
        cfg.sizes = j.value("sizes", std::vector<int>{});
        cfg.rates = j.value("rates", RateVector{});
        cfg.blocklength = j.value("blocklength", 0);
        cfg.field_exponent = j.value("field_exponent", 4);
        cfg.payload_symbols = j.value("payload_symbols", 2);
        if (j.contains("channel")) {
            const json& c = j["channel"];
            if (!c.is_object()) throw ConfigError("channel must be an object");
            reject_unknown_keys(c, {"kind", "values"}, "channel");
            cfg.channel.kind = c.value("kind", std::string{});
            cfg.channel.values = c.value("values", std::vector<double>{});
        }
        cfg.variant = parse_variant(j.value("algorithm", std::string("code1_pub")));
        cfg.trials = j.value("trials", 1);
        cfg.seed = j.value("seed", std::uint64_t{1});
        cfg.slot_cap = j.value("slot_cap", long{0});
        cfg.counts_only = j.value("counts_only", false);
        cfg.check_invariants = j.value("check_invariants", false);
        cfg.output = j.value("output", std::string{});
    } catch (const json::type_error& e) {
        throw ConfigError(std::string("config field has the wrong type: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_json(const ExperimentConfig& cfg) {
    json j;
    j["users"] = cfg.users;
    if (!cfg.sizes.empty()) j["sizes"] = cfg.sizes;
    if (!cfg.rates.empty()) j["rates"] = cfg.rates;
    if (cfg.blocklength > 0) j["blocklength"] = cfg.blocklength;
    j["field_exponent"] = cfg.field_exponent;
    j["payload_symbols"] = cfg.payload_symbols;
    j["channel"] = {{"kind", cfg.channel.kind}, {"values", cfg.channel.values}};
    j["algorithm"] = variant_name(cfg.variant);
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["slot_cap"] = cfg.slot_cap;
    j["counts_only"] = cfg.counts_only;
    j["check_invariants"] = cfg.check_invariants;
    j["output"] = cfg.output;
    return j.dump(2);
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.users < 1 || cfg.users > 16)
        throw ConfigError("users must be between 1 and 16");
    if (cfg.sizes.empty() == cfg.rates.empty())
        throw ConfigError("give exactly one of sizes and rates");
    if (!cfg.sizes.empty()) {
        if (int(cfg.sizes.size()) != cfg.users)
            throw ConfigError("sizes must list one entry per user");
        for (int s : cfg.sizes)
            if (s < 1) throw ConfigError("session sizes must be positive");
        if (cfg.blocklength < 0) throw ConfigError("blocklength cannot be negative");
    } else {
        if (int(cfg.rates.size()) != cfg.users)
            throw ConfigError("rates must list one entry per user");
        for (double r : cfg.rates)
            if (!(r > 0.0) || !std::isfinite(r))
                throw ConfigError("rates must be positive and finite");
        if (cfg.blocklength < 1)
            throw ConfigError("rates need a positive blocklength");
    }
    if (cfg.field_exponent != 4 && cfg.field_exponent != 8 &&
        cfg.field_exponent != 16)
        throw ConfigError("field_exponent must be 4, 8 or 16");
    if ((1 << cfg.field_exponent) <= cfg.users)
        throw ConfigError("field must satisfy 2^m > users");
    if (cfg.payload_symbols < 1)
        throw ConfigError("payload_symbols must be positive");
    if (variant_algorithm(cfg.variant) == Algorithm::code2 && cfg.users != 3)
        throw ConfigError("code2 runs on exactly three users");
    if (variant_private(cfg.variant) &&
        cfg.payload_symbols * cfg.field_exponent < cfg.users + 2)
        throw PacketTooSmall("private variants need payload bits >= users + 2");
    if (cfg.trials < 0) throw ConfigError("trials cannot be negative");
    if (cfg.slot_cap < 0) throw ConfigError("slot_cap cannot be negative");
    if (cfg.slot_cap > 0 && cfg.blocklength > 0 && cfg.slot_cap <= cfg.blocklength)
        throw ConfigError("slot_cap must exceed the blocklength");
    build_channel(cfg.channel, cfg.users);
}

std::vector<int> resolve_sizes(const ExperimentConfig& cfg) {
    if (!cfg.sizes.empty()) return cfg.sizes;
    std::vector<int> sizes(static_cast<std::size_t>(cfg.users));
    for (int u = 0; u < cfg.users; ++u) {
        const long s = std::lround(cfg.rates[std::size_t(u)] * cfg.blocklength);
        if (s < 1)
            throw ConfigError("rate of user " + std::to_string(u + 1) +
                              " rounds to an empty session");
        sizes[std::size_t(u)] = int(s);
    }
    return sizes;
}

ExperimentRecord run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);

    ExperimentRecord rec;
    rec.config = cfg;
    rec.sizes = resolve_sizes(cfg);

    const ChannelModel model = build_channel(cfg.channel, cfg.users);
    if (model.has_stats()) {
        rec.has_forecast = true;
        RateVector as_rates(rec.sizes.begin(), rec.sizes.end());
        rec.forecast_slots = variant_algorithm(cfg.variant) == Algorithm::code2
                                 ? forecast_code2(model, as_rates).total
                                 : forecast_code1(model, as_rates).total;
    }

    rec.trials.resize(std::size_t(cfg.trials));
    if (cfg.trials > 0) {
        int workers = int(std::thread::hardware_concurrency());
        workers = std::clamp(workers, 1, cfg.trials);
        if (workers == 1) {
            for (int t = 0; t < cfg.trials; ++t)
                rec.trials[std::size_t(t)] = run_trial(cfg, model, rec.sizes, t);
        } else {
            std::atomic<int> next{0};
            std::mutex err_mu;
            std::exception_ptr first_error;
            std::vector<std::thread> pool;
            pool.reserve(std::size_t(workers));
            for (int w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    try {
                        for (int t = next.fetch_add(1); t < cfg.trials;
                             t = next.fetch_add(1))
                            rec.trials[std::size_t(t)] =
                                run_trial(cfg, model, rec.sizes, t);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(err_mu);
                        if (!first_error) first_error = std::current_exception();
                    }
                });
            for (auto& th : pool) th.join();
            if (first_error) std::rethrow_exception(first_error);
        }
    }

    rec.aggregates = aggregate(cfg, rec.trials, rec.sizes);
    write_outputs(rec);
    return rec;
}

std::string record_json(const ExperimentRecord& rec) {
    json j;
    j["config"] = json::parse(config_json(rec.config));
    j["sizes"] = rec.sizes;
    if (rec.has_forecast) j["forecast_slots"] = rec.forecast_slots;

    json rows = json::array();
    for (const TrialResult& tr : rec.trials) {
        json r;
        r["trial"] = tr.trial;
        r["seed"] = tr.seed;
        r["completed"] = tr.completed;
        r["info_slots"] = tr.info_slots;
        r["total_slots"] = tr.total_slots;
        r["feedback_packets"] = tr.feedback_packets;
        r["feedback_slots"] = tr.feedback_slots;
        r["t2_slot"] = tr.t2_slot;
        r["deadline_missed"] = tr.deadline_missed;
        r["payload_checked"] = tr.payload_checked;
        r["decoded"] = tr.decoded;
        json qs = json::array();
        for (const QueueSlotRow& q : tr.queues)
            qs.push_back({{"queue", q.queue}, {"stage", q.stage}, {"slots", q.slots}});
        r["queues"] = std::move(qs);
        rows.push_back(std::move(r));
    }
    j["trials"] = std::move(rows);

    const Aggregates& a = rec.aggregates;
    j["aggregates"] = {{"mean_info_slots", a.mean_info_slots},
                       {"stddev_info_slots", a.stddev_info_slots},
                       {"ci95_info_slots", a.ci95_info_slots},
                       {"mean_total_slots", a.mean_total_slots},
                       {"mean_feedback_packets", a.mean_feedback_packets},
                       {"slots_per_packet", a.slots_per_packet},
                       {"error_rate", a.error_rate},
                       {"decode_rate", a.decode_rate},
                       {"incomplete_trials", a.incomplete_trials}};
    return j.dump(2) + "\n";
}

std::string record_csv(const ExperimentRecord& rec) {
    std::ostringstream out;
    out << "trial,seed,completed,info_slots,total_slots,feedback_packets,"
           "feedback_slots,t2_slot,deadline_missed,decoded_all\n";
    for (const TrialResult& tr : rec.trials) {
        out << tr.trial << ',' << tr.seed << ',' << int(tr.completed) << ','
            << tr.info_slots << ',' << tr.total_slots << ','
            << tr.feedback_packets << ',' << tr.feedback_slots << ','
            << tr.t2_slot << ',' << int(tr.deadline_missed) << ',';
        if (tr.payload_checked) {
            bool all = true;
            for (auto d : tr.decoded) all = all && d != 0;
            out << int(all);
        }
        out << '\n';
    }
    return out.str();
}

std::string output_path(const std::string& name) {
    if (name.empty() || name.front() == '/') return name;
    const char* dir = std::getenv("BPEC_OUTPUT_DIR");
    if (dir == nullptr || *dir == '\0') return name;
    std::string joined(dir);
    if (joined.back() != '/') joined.push_back('/');
    return joined + name;
}

void write_outputs(const ExperimentRecord& rec) {
    if (rec.config.output.empty()) return;
    const std::string base = output_path(rec.config.output);
    const auto dir = std::filesystem::path(base).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    for (const char* ext : {".json", ".csv"}) {
        const std::string path = base + ext;
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + path + "'");
        out << (ext[1] == 'j' ? record_json(rec) : record_csv(rec));
    }
}

SweepResult sweep_boundary(const ExperimentConfig& base,
                           const std::vector<double>& scales) {
    validate_config(base);
    if (base.rates.empty())
        throw ConfigError("sweep needs a config in rate mode");
    const ChannelModel model = build_channel(base.channel, base.users);
    if (!model.has_stats())
        throw ConfigError("sweep needs a channel with statistics");

    const double total =
        variant_algorithm(base.variant) == Algorithm::code2
            ? forecast_code2(model, base.rates).total
            : forecast_code1(model, base.rates).total;

    SweepResult out;
    out.boundary_scale = 1.0 / total;
    for (double s : scales) {
        ExperimentConfig point = base;
        point.output.clear();
        point.rates.clear();
        point.sizes.assign(std::size_t(base.users), 0);
        for (int u = 0; u < base.users; ++u)
            point.sizes[std::size_t(u)] = int(std::max<long>(
                1, std::lround(s * out.boundary_scale *
                               base.rates[std::size_t(u)] * base.blocklength)));
        const ExperimentRecord rec = run_experiment(point);
        out.points.push_back(SweepPoint{s, rec.sizes, rec.aggregates.error_rate,
                                        rec.aggregates.mean_info_slots});
    }
    return out;
}

}  // namespace bpec
