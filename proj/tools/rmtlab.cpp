// Batch front end: assumption audits, fixed-point solving, ensemble
// simulation, correlation estimation and the desk-scale verification suites.
// Exit codes: 0 success, 1 statistical/threshold failure, 2 usage error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmt/integrals.hpp"
#include "rmt/linalg.hpp"
#include "rmt/quadrature.hpp"
#include "rmt/resolvent.hpp"
#include "rmt/rng.hpp"
#include "rmt/schur_chain.hpp"
#include "rmt/self_consistent.hpp"
#include "rmt/universality.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rmt;

namespace {

constexpr const char* kVersion = "rmtlab-1.0";
constexpr std::uint64_t kDefaultSeed = 0x5EED;

struct RunConfig {
    std::string command;
    std::string generator = "ginibre";
    std::string matrix_file;
    std::size_t n = 256;
    double t = -1.0;
    double z_re = 0.0, z_im = 0.0;
    int k = 2;
    double window = 6.0;
    std::size_t bins = 40;
    std::size_t samples = 100;
    std::uint64_t seed = kDefaultSeed;
    std::string out_dir = "rmt_out";
    int threads = 0;
    double eta_min = 0.0, eta_max = 1.0;
    std::size_t eta_points = 8, z_points = 1;
    double thr_lo = 0.05, thr_hi = 20.0;
    bool redraw_a = false;

    json to_json() const {
        return json{{"command", command},   {"generator", generator},
                    {"matrix_file", matrix_file}, {"N", n},
                    {"t", t},               {"z_re", z_re},
                    {"z_im", z_im},         {"k", k},
                    {"window", window},     {"bins", bins},
                    {"samples", samples},   {"seed", seed},
                    {"out", out_dir},       {"threads", threads},
                    {"eta_min", eta_min},   {"eta_max", eta_max},
                    {"eta_points", eta_points}, {"z_points", z_points},
                    {"thr_lo", thr_lo},     {"thr_hi", thr_hi},
                    {"redraw_a", redraw_a}};
    }

    void from_json(const json& j) {
        const json& c = j.contains("config") ? j.at("config") : j;
        auto get = [&c](const char* key, auto& field) {
            if (c.contains(key)) field = c.at(key).template get<std::decay_t<decltype(field)>>();
        };
        get("generator", generator);
        get("matrix_file", matrix_file);
        get("N", n);
        get("t", t);
        get("z_re", z_re);
        get("z_im", z_im);
        get("k", k);
        get("window", window);
        get("bins", bins);
        get("samples", samples);
        get("seed", seed);
        get("out", out_dir);
        get("threads", threads);
        get("eta_min", eta_min);
        get("eta_max", eta_max);
        get("eta_points", eta_points);
        get("z_points", z_points);
        get("thr_lo", thr_lo);
        get("thr_hi", thr_hi);
        get("redraw_a", redraw_a);
    }
};

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads <= 0) {
        if (const char* env = std::getenv("RMT_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw InvalidInput("cannot write " + path.string());
    f << text;
}

void write_manifest(const fs::path& dir, const RunConfig& cfg, double wall_seconds) {
    json m;
    m["schema_version"] = 1;
    m["code_version"] = kVersion;
    m["config"] = cfg.to_json();
    m["wall_seconds"] = wall_seconds;
    write_text(dir / "manifest.json", m.dump(2));
}

MatrixGenerator make_generator(const RunConfig& cfg) {
    if (cfg.generator == "ginibre") return MatrixGenerator::ginibre(cfg.n);
    if (cfg.generator == "bernoulli") return MatrixGenerator::bernoulli(cfg.n);
    if (cfg.generator == "zero") return MatrixGenerator::zero(cfg.n);
    if (cfg.generator == "file") {
        ComplexMatrix a = read_cmat_file(cfg.matrix_file);
        if (!a.square()) throw InvalidInput("matrix file: matrix must be square");
        return MatrixGenerator::from_matrix(std::move(a));
    }
    throw InvalidInput("unknown generator '" + cfg.generator + "'");
}

// ---------------------------------------------------------------- commands

int cmd_audit(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    MatrixGenerator gen = make_generator(cfg);
    Rng rng(cfg.seed, 0, streams::kMatrixA);
    const ComplexMatrix a = gen.draw(rng);

    const double eta_min =
        cfg.eta_min > 0.0 ? cfg.eta_min : 1.0 / std::sqrt(static_cast<double>(cfg.n));
    std::vector<cx> zs;
    const cx z0(cfg.z_re, cfg.z_im);
    zs.push_back(z0);
    for (std::size_t i = 1; i < cfg.z_points; ++i) {
        const double ang = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(cfg.z_points);
        zs.push_back(z0 + 0.3 * cx(std::cos(ang), std::sin(ang)));
    }
    const std::vector<double> etas = log_eta_grid(eta_min, cfg.eta_max, cfg.eta_points);

    AssumptionReport rep = audit_assumptions(a, zs, etas, {cfg.thr_lo, cfg.thr_hi});

    fs::create_directories(cfg.out_dir);
    {
        std::ofstream f(fs::path(cfg.out_dir) / "audit.csv");
        rep.write_csv(f);
    }
    write_text(fs::path(cfg.out_dir) / "audit_summary.json", rep.json_summary());
    write_manifest(cfg.out_dir, cfg,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    std::cout << "audit: " << rep.cells.size() << " cells, pass fraction " << rep.pass_fraction()
              << "\n";
    return rep.all_pass() ? 0 : 1;
}

int cmd_eta_star(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    MatrixGenerator gen = make_generator(cfg);
    Rng rng(cfg.seed, 0, streams::kMatrixA);
    const ComplexMatrix a = gen.draw(rng);
    const HermitisationFactorization f = factorize(a, cx(cfg.z_re, cfg.z_im));
    const FixedPointResult fp = solve_eta_star(f, cfg.t);

    fs::create_directories(cfg.out_dir);
    json j;
    j["eta_star"] = fp.eta_star;
    j["sigma_star"] = fp.sigma_star;
    j["residual"] = fp.residual;
    j["bracket"] = {fp.bracket_lo, fp.bracket_hi};
    j["iterations"] = fp.iterations;
    write_text(fs::path(cfg.out_dir) / "eta_star.json", j.dump(2));
    write_manifest(cfg.out_dir, cfg,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    std::cout << "eta_star = " << fp.eta_star << "  sigma_star = " << fp.sigma_star
              << "  residual = " << fp.residual << "\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    MatrixGenerator gen = make_generator(cfg);

    Rng rng(cfg.seed, 0, streams::kMatrixA);
    const ComplexMatrix a = gen.draw(rng);
    const HermitisationFactorization f = factorize(a, cx(cfg.z_re, cfg.z_im));
    const FixedPointResult fp = solve_eta_star(f, cfg.t);

    EnsembleRun run = sample_ensemble(gen, cfg.n, cfg.t, cfg.samples, cfg.seed, cfg.redraw_a,
                                      cfg.redraw_a ? nullptr : &a);
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream fcsv(fs::path(cfg.out_dir) / "eigenvalues.csv");
        run.write_eigenvalues_csv(fcsv);
    }
    json m;
    m["schema_version"] = 1;
    m["code_version"] = kVersion;
    m["config"] = cfg.to_json();
    m["eta_star"] = fp.eta_star;
    m["sigma_star"] = fp.sigma_star;
    m["failed_samples"] =
        static_cast<std::size_t>(std::count(run.failed.begin(), run.failed.end(), 1));
    m["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(fs::path(cfg.out_dir) / "manifest.json", m.dump(2));
    std::cout << "simulate: " << cfg.samples << " samples at N=" << cfg.n
              << ", sigma_star=" << fp.sigma_star << "\n";
    return 0;
}

int cmd_correlate(const RunConfig& cfg, const std::string& run_dir) {
    const fs::path dir(run_dir);
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw InvalidInput("correlate: cannot read manifest.json in " + run_dir);
    json manifest = json::parse(mf);
    const double sigma_star = manifest.at("sigma_star").get<double>();

    RunConfig run_cfg;
    run_cfg.from_json(manifest);

    EnsembleRun run;
    run.n = run_cfg.n;
    run.t = run_cfg.t;
    run.master_seed = run_cfg.seed;
    {
        std::ifstream ecsv(dir / "eigenvalues.csv");
        if (!ecsv) throw InvalidInput("correlate: cannot read eigenvalues.csv");
        std::string line;
        std::getline(ecsv, line); // header
        std::vector<CVec> spectra;
        while (std::getline(ecsv, line)) {
            std::size_t idx;
            double re, im;
            if (std::sscanf(line.c_str(), "%zu,%lg,%lg", &idx, &re, &im) != 3) continue;
            if (idx >= spectra.size()) spectra.resize(idx + 1);
            spectra[idx].emplace_back(re, im);
        }
        run.spectra = std::move(spectra);
        run.sample_count = run.spectra.size();
        run.failed.assign(run.sample_count, 0);
    }

    const cx z(cfg.z_re, cfg.z_im);
    const CorrelationEstimate est =
        estimate_correlation(run, cfg.k, z, sigma_star, cfg.window, cfg.bins);
    fs::create_directories(cfg.out_dir);
    const std::string name = cfg.k == 1 ? "correlation_k1.csv" : "correlation_k2.csv";
    {
        std::ofstream f(fs::path(cfg.out_dir) / name);
        est.write_csv(f);
    }
    write_manifest(cfg.out_dir, cfg, 0.0);
    std::cout << "correlate: k=" << cfg.k << " written to "
              << (fs::path(cfg.out_dir) / name).string() << "\n";
    return 0;
}

int cmd_experiment(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig ec;
    ec.generator = cfg.generator;
    ec.matrix_file = cfg.matrix_file;
    ec.n = cfg.n;
    ec.t = cfg.t;
    ec.z = cx(cfg.z_re, cfg.z_im);
    ec.window_radius = cfg.window;
    ec.bins = cfg.bins;
    ec.samples = cfg.samples;
    ec.seed = cfg.seed;
    ec.redraw_a = cfg.redraw_a;

    const ExperimentReport rep = universality_experiment(ec);

    fs::create_directories(cfg.out_dir);
    const fs::path dir(cfg.out_dir);
    {
        std::ofstream f(dir / "eigenvalues.csv");
        rep.run.write_eigenvalues_csv(f);
    }
    {
        std::ofstream f(dir / "correlation_k1.csv");
        rep.k1.write_csv(f);
    }
    {
        std::ofstream f(dir / "correlation_k2.csv");
        rep.k2.write_csv(f);
    }
    {
        std::ofstream f(dir / "audit.csv");
        rep.audit.write_csv(f);
    }
    write_text(dir / "report.json", rep.json_report());
    write_manifest(dir, cfg,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    std::cout << "experiment: k1 " << (rep.k1_pass ? "pass" : "FAIL") << " ("
              << rep.k1.density_estimate << " vs " << rep.k1.density_reference << " +- "
              << rep.k1.density_stderr << "), k2 " << (rep.k2_pass ? "pass" : "FAIL")
              << " (band failures " << rep.band_failures << "/" << rep.band_bins
              << ", chi2 p=" << rep.chi2_p << ")\n";
    if (!rep.hypothesis_ok) std::cout << "note: " << rep.hypothesis_note << "\n";
    return rep.pass ? 0 : 1;
}

// ------------------------------------------------------------ verify suites

struct CheckPrinter {
    bool all_ok = true;
    json results = json::array();

    void row(const std::string& name, double lhs, double rhs, double tol, bool ok,
             const std::string& extra = "") {
        all_ok = all_ok && ok;
        std::printf("%-46s lhs=%-14.8g rhs=%-14.8g tol=%-10.3g %s %s\n", name.c_str(), lhs, rhs,
                    tol, ok ? "ok" : "FAIL", extra.c_str());
        results.push_back({{"identity", name},
                           {"lhs", lhs},
                           {"rhs", rhs},
                           {"tolerance", tol},
                           {"pass", ok},
                           {"note", extra}});
    }
};

ComplexMatrix random_matrix(Rng& rng, std::size_t n, double scale = 1.0) {
    ComplexMatrix a(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) a(i, j) = scale * rng.gaussian();
    return a;
}

void verify_mz(CheckPrinter& p) {
    for (double zr : {0.0, 0.3, 0.5, 0.8}) {
        for (double eta : {1e-6, 1e-3, 0.1, 1.0, 100.0}) {
            const SelfConsistentSolution s = solve_cubic_m(cx(zr, 0.1 * zr), eta);
            p.row("mz cubic residual z=" + std::to_string(zr) + " eta=" + std::to_string(eta),
                  s.residual, 0.0, 1e-12, s.residual <= 1e-12);
        }
        const SelfConsistentSolution s = solve_cubic_m(cx(zr, 0.0), 1e-6);
        const double limit = std::sqrt(1.0 - zr * zr);
        p.row("mz small-eta limit z=" + std::to_string(zr), s.m.imag(), limit, 1e-5,
              std::abs(s.m.imag() - limit) <= 1e-5);
    }
}

void verify_schur(CheckPrinter& p) {
    Rng rng(2024, 0, streams::kMisc);
    double worst_round = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + trial % 6;
        const ComplexMatrix a = random_matrix(rng, n);
        try {
            const SchurStepInverse inv = schur_step_inverse(a, trial % n);
            const ComplexMatrix back = schur_step_forward(inv.z, inv.v, inv.w, inv.m_small);
            worst_round = std::max(worst_round, (back - a).norm_max());
        } catch (const DegenerateSpectrum&) {
        }
    }
    p.row("schur round-trip max residual (100 trials)", worst_round, 0.0, 1e-9,
          worst_round <= 1e-9);

    double worst_rel = 0.0;
    int done = 0;
    for (int trial = 0; done < 50 && trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 2;
        const std::size_t k = 1 + trial % std::min<std::size_t>(2, n - 1);
        SchurChain chain;
        chain.n = n;
        chain.k = k;
        for (std::size_t i = 0; i < k; ++i) {
            chain.z_list.push_back(rng.gaussian());
            CVec v = rng.sphere_point(n - i);
            const double a0 = std::abs(v[0]);
            if (a0 > 0) {
                const cx ph = std::conj(v[0]) / a0;
                for (auto& x : v) x *= ph;
                v[0] = cx(v[0].real(), 0.0);
            }
            chain.v_list.push_back(v);
            CVec w(n - i - 1);
            for (auto& x : w) x = rng.gaussian();
            chain.w_list.push_back(w);
        }
        chain.m_k = random_matrix(rng, n - k);
        const double jf = jacobian(chain);
        if (jf < 1e-6) continue;
        const double jd = jacobian_fd(chain);
        worst_rel = std::max(worst_rel, std::abs(jd - jf) / jf);
        ++done;
    }
    p.row("schur FD-vs-formula Jacobian rel err (50)", worst_rel, 0.0, 1e-4, worst_rel <= 1e-4);
}

void verify_spherical(CheckPrinter& p) {
    for (std::size_t n : {std::size_t(1), std::size_t(2), std::size_t(4)}) {
        auto fhat = gaussian_quadratic_fhat(std::vector<double>(n, 1.0));
        const double got = sphere_integral_reduce(fhat, static_cast<double>(n),
                                                  std::pow(M_PI, static_cast<double>(n) - 1.0),
                                                  1e-10);
        const double want = sphere_surface_volume(n) * std::exp(-1.0);
        p.row("sphere reduce closed form N=" + std::to_string(n), got, want, 1e-8,
              std::abs(got - want) <= 1e-8);
    }
    Rng rng(7, 0, streams::kMisc);
    const std::size_t n = 8;
    std::vector<double> eigs(n);
    for (auto& e : eigs) e = 0.3 + rng.uniform();
    auto fhat = gaussian_quadratic_fhat(eigs);
    const double reduced = sphere_integral_reduce(
        fhat, static_cast<double>(n), std::pow(M_PI, static_cast<double>(n) - 1.0), 1e-9);
    auto f = [&eigs](const CVec& u) {
        double q = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) q += eigs[i] * std::norm(u[i]);
        return std::exp(-q);
    };
    const SphereMc mc = sphere_integral_mc(n, f, 1000000, 99);
    const double diff = std::abs(reduced - mc.mean);
    p.row("sphere reduce vs MC N=8", reduced, mc.mean, 3.0 * mc.stderr_, diff <= 3.0 * mc.stderr_,
          "stderr=" + std::to_string(mc.stderr_));
}

void verify_kformula(CheckPrinter& p) {
    const std::size_t m = 8;
    const double t = 1.0, eta = 0.7;
    {
        const ComplexMatrix a(m, m); // zero matrix: closed form
        const KContourResult kc = k_contour_formula(a, 0.0, eta, t);
        const double log_b =
            -std::log(t) +
            0.5 * (std::log(static_cast<double>(m)) - std::log(2.0 * M_PI * t)) +
            (static_cast<double>(m) - 1.0) * std::log(static_cast<double>(m) / (M_PI * t));
        const double closed = log_b + std::log(sphere_surface_volume(m));
        p.row("K contour closed form (A=0)", kc.log_value, closed, 1e-6,
              std::abs(kc.log_value - closed) <= 1e-6);
    }
    Rng rng(11, 0, streams::kMisc);
    const ComplexMatrix a = random_matrix(rng, m, 1.0 / std::sqrt(static_cast<double>(m)));
    const cx w(0.2, 0.1);
    const KContourResult kc = k_contour_formula(a, w, eta, t);
    const KSphereMcResult mc = k_tilde_sphere_mc(a, w, t, 400000, 5);
    const double diff = std::abs(kc.value - mc.value);
    p.row("K contour vs sphere MC (dim 8)", kc.value, mc.value, 3.0 * mc.stderr_,
          diff <= 3.0 * mc.stderr_, "stderr=" + std::to_string(mc.stderr_));
    const KContourResult kc2 = k_contour_formula(a, w, 2.0 * eta, t);
    p.row("K contour eta-independence", kc.log_value, kc2.log_value, 1e-7,
          std::abs(kc.log_value - kc2.log_value) <= 1e-7);
}

void verify_duality(CheckPrinter& p) {
    {
        const ComplexMatrix a(1, 1);
        const DualityResult d = char_poly_duality_k1(a, 0.0, 1.0, 40000, 3);
        p.row("duality scalar closed form", d.dual_integral, 1.0, 1e-6,
              std::abs(d.dual_integral - 1.0) <= 1e-6);
        p.row("duality scalar MC", d.gaussian_mc, 1.0, 3.0 * d.mc_stderr,
              std::abs(d.gaussian_mc - 1.0) <= 3.0 * d.mc_stderr);
    }
    Rng rng(13, 0, streams::kMisc);
    const std::size_t n = 4;
    const ComplexMatrix a = random_matrix(rng, n, 0.5);
    const DualityResult d = char_poly_duality_k1(a, cx(0.3, 0.0), 0.5, 100000, 17);
    const double diff = std::abs(d.gaussian_mc - d.dual_integral);
    p.row("duality MC vs quadrature (n=4)", d.gaussian_mc, d.dual_integral, 3.0 * d.mc_stderr,
          diff <= 3.0 * d.mc_stderr, "stderr=" + std::to_string(d.mc_stderr));
}

void verify_logdet(CheckPrinter& p) {
    Rng rng(5, 0, streams::kMisc);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial % 7;
        const ComplexMatrix a = random_matrix(rng, n);
        const double tcut = trial % 2 == 0 ? 10.0 : 50.0;
        try {
            worst = std::max(worst, logdet_identity_check(a, cx(0.1, 0.05), tcut));
        } catch (const SingularMatrix&) {
        }
    }
    p.row("logdet identity max residual (20 trials)", worst, 0.0, 1e-8, worst <= 1e-8);
}

void verify_girko(CheckPrinter& p) {
    Rng rng(23, 0, streams::kMisc);
    const ComplexMatrix a = random_matrix(rng, 3, 0.4);
    auto bump = [](cx zz) {
        const double r2 = std::norm(zz) / 9.0;
        return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
    };
    const GirkoResult g = girko_check(a, bump, 0.0, 4.0, 400);
    const double rel = g.residual / std::abs(g.lhs);
    p.row("girko identity rel residual (N=3)", g.lhs, g.rhs, 1e-2, rel <= 1e-2,
          g.boundary_warning ? "boundary warning" : "");
}

void verify_minor(CheckPrinter& p) {
    Rng rng(29, 0, streams::kMisc);
    const std::size_t n = 6, k = 2;
    // A = I + i C with C Hermitian: Re A = I > 0
    ComplexMatrix c = random_matrix(rng, n, 0.5);
    ComplexMatrix a = ComplexMatrix::identity(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            a(i, j) += cx(0.0, 0.5) * (c(i, j) + std::conj(c(j, i)));
    ComplexMatrix uk(n, k);
    for (std::size_t col = 0; col < k; ++col) {
        CVec v = rng.sphere_point(n);
        for (std::size_t prev = 0; prev < col; ++prev) {
            cx s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += std::conj(uk(i, prev)) * v[i];
            for (std::size_t i = 0; i < n; ++i) v[i] -= s * uk(i, prev);
        }
        const double nv = vec_norm(v);
        for (std::size_t i = 0; i < n; ++i) uk(i, col) = v[i] / nv;
    }
    const MinorResolventResult r = minor_resolvent_check(a, uk);
    p.row("minor resolvent identity residual", r.identity_residual, 0.0, 1e-10,
          r.identity_residual <= 1e-10);
    p.row("minor resolvent norm bound", r.correction_norm, r.bound, 0.0,
          r.norm_bound_applicable && r.norm_bound_holds);
}

int cmd_verify(const std::string& suite, const std::string& out_dir) {
    CheckPrinter p;
    bool known = false;
    const bool all = suite == "all";
    if (all || suite == "mz") { verify_mz(p); known = true; }
    if (all || suite == "schur") { verify_schur(p); known = true; }
    if (all || suite == "spherical") { verify_spherical(p); known = true; }
    if (all || suite == "kformula") { verify_kformula(p); known = true; }
    if (all || suite == "duality") { verify_duality(p); known = true; }
    if (all || suite == "logdet") { verify_logdet(p); known = true; }
    if (all || suite == "girko") { verify_girko(p); known = true; }
    if (all || suite == "minor") { verify_minor(p); known = true; }
    if (!known) {
        std::cerr << "unknown suite '" << suite
                  << "' (want schur|spherical|kformula|duality|mz|logdet|girko|minor|all)\n";
        return 2;
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        json j;
        j["suite"] = suite;
        j["checks"] = p.results;
        j["pass"] = p.all_ok;
        write_text(fs::path(out_dir) / "verify.json", j.dump(2));
    }
    return p.all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for bulk spectral statistics of Gauss-divisible "
                 "non-Hermitian matrices"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_file;
    std::string run_dir;
    std::string suite = "all";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON config file (flags override)");
        sub->add_option("--generator", cfg.generator, "ginibre|bernoulli|zero|file");
        sub->add_option("--matrix-file", cfg.matrix_file, "CMAT file for --generator file");
        sub->add_option("--N", cfg.n, "matrix dimension");
        sub->add_option("--z-re", cfg.z_re, "Re z");
        sub->add_option("--z-im", cfg.z_im, "Im z");
        sub->add_option("--samples", cfg.samples, "sample count");
        sub->add_option("--seed", cfg.seed, "master seed (default 0x5EED)");
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--threads", cfg.threads, "thread count (env RMT_THREADS, default cores)");
        sub->add_flag("--redraw-a", cfg.redraw_a, "redraw A per sample");
    };

    CLI::App* audit = app.add_subcommand("audit", "tabulate the trace-family assumptions");
    add_common(audit);
    audit->add_option("--eta-min", cfg.eta_min, "smallest eta (default N^{-1/2})");
    audit->add_option("--eta-max", cfg.eta_max, "largest eta");
    audit->add_option("--eta-points", cfg.eta_points, "eta grid size");
    audit->add_option("--z-points", cfg.z_points, "z ring points around z");
    audit->add_option("--c-lo", cfg.thr_lo, "lower threshold c");
    audit->add_option("--c-hi", cfg.thr_hi, "upper threshold C");

    CLI::App* eta = app.add_subcommand("eta-star", "solve the smoothing-scale fixed point");
    add_common(eta);
    eta->add_option("--t", cfg.t, "Gaussian variance t");

    CLI::App* sim = app.add_subcommand("simulate", "sample spectra of A + sqrt(t) B");
    add_common(sim);
    sim->add_option("--t", cfg.t, "Gaussian variance t");

    CLI::App* corr = app.add_subcommand("correlate", "estimate correlations from a stored run");
    add_common(corr);
    corr->add_option("--run", run_dir, "directory produced by simulate")->required();
    corr->add_option("--k", cfg.k, "correlation order (1 or 2)");
    corr->add_option("--window", cfg.window, "window radius (rescaled units)");
    corr->add_option("--bins", cfg.bins, "annular bins");

    CLI::App* ver = app.add_subcommand("verify", "run a named oracle suite");
    ver->add_option("suite", suite, "schur|spherical|kformula|duality|mz|logdet|girko|minor|all");
    ver->add_option("--out", cfg.out_dir, "optional directory for verify.json");
    ver->add_option("--threads", cfg.threads, "thread count");

    CLI::App* exp = app.add_subcommand("experiment", "end-to-end universality experiment");
    add_common(exp);
    exp->add_option("--t", cfg.t, "Gaussian variance t");
    exp->add_option("--window", cfg.window, "window radius (rescaled units)");
    exp->add_option("--bins", cfg.bins, "annular bins");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (!config_file.empty()) {
            std::ifstream f(config_file);
            if (!f) throw InvalidInput("cannot read config file " + config_file);
            RunConfig file_cfg = cfg;
            file_cfg.from_json(json::parse(f));
            CLI::App* sub = app.get_subcommands().front();
            // file value wins only where the flag was not given explicitly
            auto merge = [&](const char* flag, auto RunConfig::* field) {
                const CLI::Option* opt = sub->get_option_no_throw(flag);
                if (!opt || opt->count() == 0) cfg.*field = file_cfg.*field;
            };
            merge("--generator", &RunConfig::generator);
            merge("--matrix-file", &RunConfig::matrix_file);
            merge("--N", &RunConfig::n);
            merge("--t", &RunConfig::t);
            merge("--z-re", &RunConfig::z_re);
            merge("--z-im", &RunConfig::z_im);
            merge("--samples", &RunConfig::samples);
            merge("--seed", &RunConfig::seed);
            merge("--window", &RunConfig::window);
            merge("--bins", &RunConfig::bins);
            merge("--redraw-a", &RunConfig::redraw_a);
            merge("--eta-min", &RunConfig::eta_min);
            merge("--eta-max", &RunConfig::eta_max);
            merge("--eta-points", &RunConfig::eta_points);
            merge("--z-points", &RunConfig::z_points);
            merge("--c-lo", &RunConfig::thr_lo);
            merge("--c-hi", &RunConfig::thr_hi);
            merge("--k", &RunConfig::k);
            merge("--threads", &RunConfig::threads);
        }
        if ((eta->parsed() || sim->parsed() || exp->parsed()) && cfg.t <= 0.0) {
            std::cerr << "missing or invalid Gaussian variance: set --t > 0\n";
            return 2;
        }
        apply_threads(cfg.threads);

        if (audit->parsed()) { cfg.command = "audit"; return cmd_audit(cfg); }
        if (eta->parsed()) { cfg.command = "eta-star"; return cmd_eta_star(cfg); }
        if (sim->parsed()) { cfg.command = "simulate"; return cmd_simulate(cfg); }
        if (corr->parsed()) { cfg.command = "correlate"; return cmd_correlate(cfg, run_dir); }
        if (ver->parsed()) {
            cfg.command = "verify";
            return cmd_verify(suite, ver->count("--out") ? cfg.out_dir : "");
        }
        if (exp->parsed()) { cfg.command = "experiment"; return cmd_experiment(cfg); }
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
