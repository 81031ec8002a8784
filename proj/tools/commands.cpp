// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include "commands.hpp"

#include "arqlab/dmt.hpp"
#include "arqlab/parallel.hpp"
#include "arqlab/queueing.hpp"
#include "arqlab/simkit.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace arqlab::cli
{

namespace
{

using json = nlohmann::json;

template <typename T>
std::vector<T> scalar_or_list(const json &v)
{
    if (v.is_array())
        return v.get<std::vector<T>>();
    return {v.get<T>()};
}

protocols::CombiningGain parse_combining(const std::string &s)
{
    if (s == "1" || s == "unit")
        return protocols::CombiningGain::unit;
    if (s == "k" || s == "collision-size")
        return protocols::CombiningGain::collision_size;
    throw ConfigError("combining gain must be '1' or 'k', got '" + s + "'");
}

std::string deadline_text(std::optional<int> l) { return l ? std::to_string(*l) : std::string(); }

/// Arrival multiplexing gain that the high-SNR indicators see.
double arrival_gain(const ExperimentConfig &cfg) { return cfg.rate_mode == RateMode::multiplexing ? cfg.r : 0.0; }

} // namespace

double ExperimentConfig::p_t_for(Protocol p) const
{
    if (p_t)
        return *p_t;
    return p == Protocol::gta ? dmt::gta_optimal_pt(antennas) : 1.0;
}

std::vector<std::optional<int>> ExperimentConfig::deadlines_for(Protocol p) const
{
    if (p != Protocol::irarq)
        return {std::nullopt};
    return {deadlines.begin(), deadlines.end()};
}

protocols::ProtocolParams ExperimentConfig::params_for(Protocol p, std::optional<int> deadline, double snr) const
{
    protocols::ProtocolParams params;
    params.p_t = p_t_for(p);
    params.rate = first_round_rate(rate_mode, r, snr);
    params.deadline = deadline.value_or(1);
    params.combining = combining;
    return params;
}

void ExperimentConfig::validate() const
{
    if (protocols.empty())
        throw ConfigError("protocol list is empty");
    if (antennas.users < 1 || antennas.tx_antennas < 1 || antennas.rx_antennas < 1)
        throw ConfigError("users, tx-ant and rx-ant must be >= 1");
    if (antennas.users > 20)
        throw ConfigError("at most 20 users are supported");
    if (deadlines.empty() || snr_db.empty() || lambdas.empty())
        throw ConfigError("deadline, snr-db and lambda grids must be nonempty");
    for (int l : deadlines)
        if (l < 1)
            throw ConfigError("deadline must be >= 1");
    if (p_t && !(*p_t > 0.0 && *p_t <= 1.0))
        throw ConfigError("pt must lie in (0, 1]");
    if (!(r >= 0.0))
        throw ConfigError("r must be >= 0");
    if (trials == 0)
        throw ConfigError("trials must be >= 1");
    if (horizon == 0)
        throw ConfigError("horizon must be >= 1");
    if (workers < 1)
        throw ConfigError("workers must be >= 1");
    for (double l : lambdas)
        if (!(l >= 0.0))
            throw ConfigError("lambda must be >= 0");
}

void ExperimentConfig::require_seed(const char *command) const
{
    if (!seed)
        throw ConfigError(std::string(command) + ": --seed is required for simulation commands");
}

void apply_json(ExperimentConfig &cfg, const std::string &json_text)
{
    json doc;
    try
    {
        doc = json::parse(json_text);
    }
    catch (const json::parse_error &e)
    {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ConfigError("config must be a JSON object");
    try
    {
        for (const auto &[key, v] : doc.items())
        {
            if (key == "protocol")
            {
                cfg.protocols.clear();
                for (const auto &s : scalar_or_list<std::string>(v))
                    cfg.protocols.push_back(parse_protocol(s));
            }
            else if (key == "users")
                cfg.antennas.users = v.get<int>();
            else if (key == "tx_ant")
                cfg.antennas.tx_antennas = v.get<int>();
            else if (key == "rx_ant")
                cfg.antennas.rx_antennas = v.get<int>();
            else if (key == "deadline")
                cfg.deadlines = scalar_or_list<int>(v);
            else if (key == "pt")
                cfg.p_t = v.get<double>();
            else if (key == "snr_db")
                cfg.snr_db = scalar_or_list<double>(v);
            else if (key == "lambda")
                cfg.lambdas = scalar_or_list<double>(v);
            else if (key == "rate_mode")
                cfg.rate_mode = parse_rate_mode(v.get<std::string>());
            else if (key == "r")
                cfg.r = v.get<double>();
            else if (key == "trials")
                cfg.trials = v.get<std::uint64_t>();
            else if (key == "target_errors")
                cfg.target_errors = v.get<std::uint64_t>();
            else if (key == "horizon")
                cfg.horizon = v.get<std::uint64_t>();
            else if (key == "seed")
                cfg.seed = v.get<std::uint64_t>();
            else if (key == "out")
                cfg.out = v.get<std::string>();
            else if (key == "workers")
                cfg.workers = v.get<int>();
            else if (key == "combining_gain")
                cfg.combining = parse_combining(v.is_string() ? v.get<std::string>() : std::to_string(v.get<int>()));
            else if (key == "trace")
                cfg.trace = v.get<std::string>();
            else if (key == "scan")
                cfg.scan = v.get<bool>();
            else
                throw ConfigError("unknown config key '" + key + "'");
        }
    }
    catch (const json::exception &e)
    {
        throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
    }
    catch (const std::invalid_argument &e)
    {
        throw ConfigError(e.what());
    }
}

void cmd_dmt(const ExperimentConfig &cfg, std::ostream &os)
{
    dmt::write_tradeoff_csv_header(os);
    for (Protocol p : cfg.protocols)
    {
        const double p_t = p == Protocol::irarq ? 1.0 : cfg.p_t_for(p);
        for (auto l : cfg.deadlines_for(p))
            dmt::write_tradeoff_csv(os, p, p_t, dmt::tradeoff_curve(p, cfg.antennas, p_t, l));
    }
}

void cmd_gta_recursion(const ExperimentConfig &cfg, std::ostream &os)
{
    const int k_max = cfg.antennas.users;
    const auto exact = dmt::gta_recursion<dmt::Rational>(k_max);
    os << "k,X,J,X_exact,J_exact\n";
    const auto old = os.precision(15);
    for (int k = 0; k <= k_max; ++k)
        os << k << ',' << dmt::to_double(exact.expected_length[k]) << ','
           << dmt::to_double(exact.expected_delivered[k]) << ',' << exact.expected_length[k] << ','
           << exact.expected_delivered[k] << '\n';
    os.precision(old);
}

void cmd_beta(const ExperimentConfig &cfg, std::ostream &os)
{
    cfg.require_seed("beta");
    const sim::SimOptions opts{cfg.workers};
    os << "snr_db,k,l,beta,stderr,beta_highsnr,R,trials,seed\n";
    const auto old = os.precision(10);
    for (int deadline : cfg.deadlines)
        for (double db : cfg.snr_db)
        {
            const double snr = db_to_linear(db);
            const double rate = first_round_rate(cfg.rate_mode, cfg.r, snr);
            const auto b = sim::estimate_beta(cfg.antennas, snr, rate, deadline, cfg.trials, *cfg.seed, opts);
            for (int k = 1; k <= cfg.antennas.users; ++k)
                for (int l = 1; l <= deadline; ++l)
                    os << db << ',' << k << ',' << l << ',' << b(k, l) << ',' << b.stderr_(k, l) << ','
                       << dmt::beta_highsnr(k, cfg.antennas.tx_antennas, cfg.antennas.rx_antennas,
                                            arrival_gain(cfg), l)
                       << ',' << rate << ',' << cfg.trials << ',' << *cfg.seed << '\n';
        }
    os.precision(old);
}

void cmd_throughput(const ExperimentConfig &cfg, std::ostream &os)
{
    cfg.require_seed("throughput");
    const sim::SimOptions opts{cfg.workers};
    const std::uint64_t seed = *cfg.seed;
    sim::write_sim_csv_header(os);
    for (Protocol p : cfg.protocols)
        for (auto l : cfg.deadlines_for(p))
            for (double db : cfg.snr_db)
            {
                const double snr = db_to_linear(db);
                const auto params = cfg.params_for(p, l, snr);
                sim::SimRecord rec{db, std::string(to_string(p)), l, params.p_t, cfg.r, "", 0.0, 0.0, 0, seed};
                const auto fl = sim::fully_loaded_throughput(p, cfg.antennas, params, snr, cfg.trials, seed, opts);
                rec.metric = "throughput_sim";
                rec.value = fl.packets_per_slot;
                rec.stderr_ = fl.stderr_;
                rec.trials = fl.slots;
                sim::write_sim_csv(os, rec);

                const std::uint64_t seed2 = derive_seed(seed, 1);
                sim::RenewalThroughput rr;
                if (p == Protocol::irarq)
                    rr = sim::irarq_renewal_throughput(
                        sim::estimate_beta(cfg.antennas, snr, params.rate, params.deadline, cfg.trials, seed2, opts),
                        params.p_t);
                else
                    rr = sim::renewal_throughput(
                        sim::estimate_epoch_statistics(p, cfg.antennas, params, snr, cfg.trials, seed2, opts),
                        params.p_t);
                rec.metric = "throughput_renewal";
                rec.value = rr.packets_per_slot;
                rec.stderr_ = rr.stderr_;
                rec.trials = cfg.trials;
                rec.seed = seed2;
                sim::write_sim_csv(os, rec);
            }
}

void cmd_pe_vs_snr(const ExperimentConfig &cfg, std::ostream &os)
{
    cfg.require_seed("pe");
    const sim::SimOptions opts{cfg.workers};
    sim::write_sim_csv_header(os);
    for (Protocol p : cfg.protocols)
        for (auto l : cfg.deadlines_for(p))
            for (double db : cfg.snr_db)
            {
                const double snr = db_to_linear(db);
                const auto params = cfg.params_for(p, l, snr);
                sim::ErrorStopRule stop;
                stop.max_epochs = cfg.trials;
                stop.target_errors = cfg.target_errors;
                const auto e = sim::system_error_probability(p, cfg.antennas, params, snr, stop, *cfg.seed, opts);
                sim::SimRecord rec{db, std::string(to_string(p)), l, params.p_t, cfg.r, "pe", e.pe, e.stderr_,
                                   e.nonidle_epochs, *cfg.seed};
                sim::write_sim_csv(os, rec);
                for (std::size_t u = 0; u < e.per_user.size(); ++u)
                {
                    rec.metric = "pe_user" + std::to_string(u + 1);
                    rec.value = e.per_user[u];
                    rec.stderr_ = std::sqrt(e.per_user[u] * (1.0 - e.per_user[u]) /
                                            static_cast<double>(std::max<std::uint64_t>(e.nonidle_epochs, 1)));
                    sim::write_sim_csv(os, rec);
                }
            }
}

void cmd_delay_vs_load(const ExperimentConfig &cfg, std::ostream &os)
{
    cfg.require_seed("delay");
    const int users = cfg.antennas.users;
    for (double l : cfg.lambdas)
        if (l > users)
            throw ConfigError("lambda must lie in [0, K]");
    std::ofstream trace_file;
    queueing::RandomAccessOptions opts;
    opts.horizon = cfg.horizon;
    if (!cfg.trace.empty())
    {
        trace_file.open(cfg.trace);
        if (!trace_file)
            throw ConfigError("cannot open trace file " + cfg.trace);
        opts.trace = &trace_file;
    }
    const int workers = opts.trace ? 1 : cfg.workers;

    os << "protocol,K,M,N,L,p_t,r_A,snr_db,lambda,delay,delay_ci,pe,verdict,seed\n";
    const auto old = os.precision(10);
    auto row = [&](Protocol p, std::optional<int> l, double p_t, double db, double lambda) -> std::ostream & {
        return os << to_string(p) << ',' << users << ',' << cfg.antennas.tx_antennas << ','
                  << cfg.antennas.rx_antennas << ',' << deadline_text(l) << ',' << p_t << ',' << cfg.r << ',' << db
                  << ',' << lambda << ',';
    };
    for (Protocol p : cfg.protocols)
        for (auto l : cfg.deadlines_for(p))
            for (double db : cfg.snr_db)
            {
                const double snr = db_to_linear(db);
                const auto params = cfg.params_for(p, l, snr);
                std::vector<queueing::DelayReport> reports(cfg.lambdas.size());
                for_each_chunk_ordered(
                    cfg.lambdas.size(), workers,
                    [&](std::uint64_t i) {
                        return queueing::simulate_random_arrivals(p, cfg.antennas, params, cfg.lambdas[i], snr,
                                                                  derive_seed(*cfg.seed, i), opts);
                    },
                    [&](std::uint64_t i, queueing::DelayReport &&rep) {
                        reports[i] = std::move(rep);
                        return true;
                    });
                for (const auto &rep : reports)
                    row(p, l, params.p_t, db, rep.lambda)
                        << rep.delay << ',' << rep.delay_ci << ',' << rep.pe << ',' << to_string(rep.verdict) << ','
                        << rep.seed << '\n';
                if (p != Protocol::irarq)
                    continue;
                const auto beta = sim::estimate_beta(cfg.antennas, snr, params.rate, params.deadline, cfg.trials,
                                                     *cfg.seed, sim::SimOptions{cfg.workers});
                for (double lambda : cfg.lambdas)
                    row(p, l, params.p_t, db, lambda)
                        << queueing::analytic_delay(lambda, users, params.p_t, beta) << ",,,analytic," << *cfg.seed
                        << '\n';
            }
    os.precision(old);
}

void cmd_stability(const ExperimentConfig &cfg, std::ostream &os)
{
    if (cfg.scan)
        cfg.require_seed("stability --scan");
    const int users = cfg.antennas.users;
    os << "protocol,K,M,N,L,p_t,r_A,snr_db,lambda_max,source\n";
    const auto old = os.precision(10);
    auto row = [&](Protocol p, std::optional<int> l, double p_t, const std::string &db) -> std::ostream & {
        return os << to_string(p) << ',' << users << ',' << cfg.antennas.tx_antennas << ','
                  << cfg.antennas.rx_antennas << ',' << deadline_text(l) << ',' << p_t << ',' << cfg.r << ',' << db
                  << ',';
    };
    for (Protocol p : cfg.protocols)
        for (auto l : cfg.deadlines_for(p))
        {
            const double p_t = cfg.p_t_for(p);
            row(p, l, p_t, "inf") << dmt::stability_region(p, cfg.antennas, p_t, arrival_gain(cfg), l.value_or(1))
                                  << ",high-snr\n";
            if (!cfg.scan)
                continue;
            std::vector<double> grid = cfg.lambdas;
            if (grid.size() == 1)
            {
                // A single lambda means "scan up to K in steps of 0.05".
                grid.clear();
                for (int i = 1; 0.05 * i <= users + 1e-9; ++i)
                    grid.push_back(0.05 * i);
            }
            queueing::RandomAccessOptions opts;
            opts.horizon = cfg.horizon;
            for (double db : cfg.snr_db)
            {
                const double snr = db_to_linear(db);
                const auto params = cfg.params_for(p, l, snr);
                const auto scan = queueing::stability_boundary_scan(p, cfg.antennas, params, snr, grid, *cfg.seed,
                                                                    opts, cfg.workers);
                std::ostringstream dbs;
                dbs << db;
                row(p, l, p_t, dbs.str());
                if (scan.boundary)
                    os << *scan.boundary;
                os << ",scan\n";
            }
        }
    os.precision(old);
}

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Random-access channel lab: GTA, O-NDMA and IR-ARQ over Rayleigh block fading", "arqlab"};
    app.require_subcommand(1);
    app.fallthrough();

    std::vector<std::string> protocol_list;
    std::vector<int> deadline_list;
    std::vector<double> snr_list, lambda_list;
    int users = 0, tx = 0, rx = 0, workers = 0;
    double pt = 0.0, r = 0.0;
    std::string rate_mode, out_path, config_path, trace_path, combining;
    std::uint64_t trials = 0, target_errors = 0, horizon = 0, seed = 0;
    bool scan = false;

    auto *o_protocol = app.add_option("--protocol", protocol_list, "GTA, O-NDMA, IR-ARQ (repeat or comma-separate)")
                           ->delimiter(',');
    auto *o_users = app.add_option("--users", users, "number of users K (default 2)");
    auto *o_tx = app.add_option("--tx-ant", tx, "transmit antennas per user M (default 1)");
    auto *o_rx = app.add_option("--rx-ant", rx, "receive antennas N (default 1)");
    auto *o_deadline = app.add_option("--deadline", deadline_list, "IR-ARQ deadline(s) L (default 2)")->delimiter(',');
    auto *o_pt = app.add_option("--pt", pt, "transmission probability (default: GTA optimum, 1 otherwise)");
    auto *o_snr = app.add_option("--snr-db", snr_list, "SNR grid in dB (default 30)")->delimiter(',');
    auto *o_lambda = app.add_option("--lambda", lambda_list, "total arrival rate grid, packets/slot")->delimiter(',');
    auto *o_rate_mode =
        app.add_option("--rate-mode", rate_mode, "fixed-R (R = r bits) or multiplexing (R = r log2(1+snr))");
    auto *o_r = app.add_option("--r", r, "rate parameter (default 0.45)");
    auto *o_trials = app.add_option("--trials", trials, "Monte Carlo trials, epochs or slots (default 100000)");
    auto *o_target = app.add_option("--target-errors", target_errors, "pe: stop after this many error epochs");
    auto *o_horizon = app.add_option("--horizon", horizon, "random-arrival horizon in slots (default 200000)");
    auto *o_seed = app.add_option("--seed", seed, "master seed (required for simulations)");
    auto *o_out = app.add_option("--out", out_path, "output CSV path (default stdout)");
    auto *o_workers = app.add_option("--workers", workers, "worker threads; results do not depend on it");
    auto *o_combining =
        app.add_option("--combining-gain", combining, "O-NDMA single-user SNR gain: 1 (default) or k");
    app.add_option("--config", config_path, "JSON config; command-line flags override it");
    auto *o_trace = app.add_option("--trace", trace_path, "delay: per-slot epoch trace file");

    app.add_subcommand("dmt", "tradeoff curves d(r_e)");
    app.add_subcommand("gta-recursion", "GTA expected epoch lengths X_k and deliveries J_k");
    app.add_subcommand("beta", "Monte Carlo persistent-outage table beta_k(l)");
    app.add_subcommand("throughput", "fully-loaded throughput, simulated and renewal-reward");
    app.add_subcommand("pe", "system error probability versus SNR");
    app.add_subcommand("delay", "average delay versus load under random arrivals");
    auto *stability = app.add_subcommand("stability", "stability regions, optionally with a simulated scan");
    auto *o_scan = stability->add_flag("--scan", scan, "also run a simulated boundary scan");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e, out, err);
    }
    catch (const CLI::CallForAllHelp &e)
    {
        return app.exit(e, out, err);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e, out, err);
        return 2;
    }

    try
    {
        ExperimentConfig cfg;
        if (!config_path.empty())
        {
            std::ifstream in(config_path);
            if (!in)
                throw ConfigError("cannot read config " + config_path);
            std::ostringstream text;
            text << in.rdbuf();
            apply_json(cfg, text.str());
        }
        if (o_protocol->count())
        {
            cfg.protocols.clear();
            for (const auto &s : protocol_list)
                cfg.protocols.push_back(parse_protocol(s));
        }
        if (o_users->count())
            cfg.antennas.users = users;
        if (o_tx->count())
            cfg.antennas.tx_antennas = tx;
        if (o_rx->count())
            cfg.antennas.rx_antennas = rx;
        if (o_deadline->count())
            cfg.deadlines = deadline_list;
        if (o_pt->count())
            cfg.p_t = pt;
        if (o_snr->count())
            cfg.snr_db = snr_list;
        if (o_lambda->count())
            cfg.lambdas = lambda_list;
        if (o_rate_mode->count())
            cfg.rate_mode = parse_rate_mode(rate_mode);
        if (o_r->count())
            cfg.r = r;
        if (o_trials->count())
            cfg.trials = trials;
        if (o_target->count())
            cfg.target_errors = target_errors;
        if (o_horizon->count())
            cfg.horizon = horizon;
        if (o_seed->count())
            cfg.seed = seed;
        if (o_out->count())
            cfg.out = out_path;
        if (o_workers->count())
            cfg.workers = workers;
        if (o_combining->count())
            cfg.combining = parse_combining(combining);
        if (o_trace->count())
            cfg.trace = trace_path;
        if (o_scan->count())
            cfg.scan = true;
        cfg.validate();

        std::ofstream file;
        std::ostream *os = &out;
        if (!cfg.out.empty())
        {
            file.open(cfg.out);
            if (!file)
                throw ConfigError("cannot open output " + cfg.out);
            os = &file;
        }

        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "dmt")
            cmd_dmt(cfg, *os);
        else if (name == "gta-recursion")
            cmd_gta_recursion(cfg, *os);
        else if (name == "beta")
            cmd_beta(cfg, *os);
        else if (name == "throughput")
            cmd_throughput(cfg, *os);
        else if (name == "pe")
            cmd_pe_vs_snr(cfg, *os);
        else if (name == "delay")
            cmd_delay_vs_load(cfg, *os);
        else if (name == "stability")
            cmd_stability(cfg, *os);
        return 0;
    }
    catch (const ConfigError &e)
    {
        err << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::invalid_argument &e)
    {
        err << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception &e)
    {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace arqlab::cli
