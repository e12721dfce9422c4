// Command-line front end: spectra, verification reports, and point clouds
// from a JSON run configuration.
//
// Exit codes: 0 ok, 2 configuration error, 3 window regularity failure,
// 4 accuracy/truncation failure, 5 failed verification check.

#include "sphdiff/config.hpp"
#include "sphdiff/diffraction.hpp"
#include "sphdiff/errors.hpp"
#include "sphdiff/io.hpp"
#include "sphdiff/parallel.hpp"
#include "sphdiff/sl2.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace sphdiff;

namespace {

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return RunConfig::from_json_text(ss.str());
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream os(dir / name);
    if (!os) throw ConfigError("cannot write " + (dir / name).string());
    return os;
}

Window checked_window(const RunConfig& cfg, const Scheme& scheme) {
    Window window = build_window(cfg);
    double radius = cfg.sampling.regularity_radius > 0.0 ? cfg.sampling.regularity_radius
                                                         : cfg.sampling.R;
    window.status = window_regularity_check(scheme, window, radius);
    if (window.status.state == RegularityStatus::State::BoundaryHit) {
        std::ostringstream os;
        os << "window boundary meets the lattice projection at internal point (";
        for (size_t i = 0; i < window.status.hit_internal.size(); ++i) {
            if (i) os << ", ";
            os << window.status.hit_internal[i];
        }
        os << ")";
        throw RegularityError(os.str());
    }
    return window;
}

int cmd_spectrum(const RunConfig& cfg, const fs::path& outdir) {
    Scheme scheme = build_scheme(cfg);
    Window window = checked_window(cfg, scheme);
    DiffractionSpectrum spec;
    if (scheme.variant == Scheme::Variant::Abelian)
        spec = meyer_spectrum(scheme, window, cfg.truncation);
    else if (scheme.variant == Scheme::Variant::EuclideanMotion)
        spec = powder_spectrum(scheme, window, cfg.truncation);
    else
        spec = heisenberg_spectrum(scheme, window, cfg.truncation);

    std::string hash = config_hash(cfg);
    for (const std::string& fmt : cfg.output.formats) {
        if (fmt == "json") {
            auto os = open_out(outdir, "spectrum.json");
            write_spectrum_json(os, spec, hash);
        } else if (fmt == "csv") {
            auto os = open_out(outdir, "spectrum.csv");
            write_spectrum_csv(os, spec, hash);
        } else if (fmt == "plot") {
            auto oh = open_out(outdir, "plot_horizontal.dat");
            write_plot_horizontal(oh, spec);
            auto ov = open_out(outdir, "plot_vertical.dat");
            write_plot_vertical(ov, spec);
        }
    }
    std::cout << "atoms: " << spec.atoms.size() << "\n"
              << "total mass: " << spec.total_mass() << "\n"
              << "dropped mass bound: " << spec.dropped_mass << "\n";
    return 0;
}

int cmd_points(const RunConfig& cfg, const fs::path& outdir) {
    Scheme scheme = build_scheme(cfg);
    Window window = checked_window(cfg, scheme);
    ModelSetSample sample = generate_points(scheme, window, cfg.sampling.R);
    auto os = open_out(outdir, "points.csv");
    write_points_csv(os, sample, config_hash(cfg));
    std::cout << "points: " << sample.num_points() << "\n"
              << "density: " << sample.density << "\n";
    return 0;
}

int cmd_verify(const RunConfig& cfg, const fs::path& outdir, const std::string& check,
               double tolerance) {
    std::map<std::string, double> metrics;
    bool pass = false;

    if (check == "specfun") {
        // Laguerre orthonormality and recurrence residual
        QuadratureRule rule = gauss_rule(QuadKind::GaussLaguerre, 64);
        double max_ortho = 0.0;
        for (int n = 0; n <= 20; ++n)
            for (int m = 0; m <= 20; ++m) {
                double s = quad_sum(rule, [&](double t) { return laguerre(n, t) * laguerre(m, t); });
                max_ortho = std::max(max_ortho, std::fabs(s - (n == m ? 1.0 : 0.0)));
            }
        metrics["laguerre_orthonormality_max_err"] = max_ortho;
        double max_rec = 0.0;
        for (int n = 1; n <= 50; ++n)
            for (int k = 0; k <= 100; ++k) {
                double t = k;
                double lhs = t * laguerre(n, t);
                double rhs = (2.0 * n + 1.0) * laguerre(n, t) - n * laguerre(n - 1, t) -
                             (n + 1.0) * laguerre(n + 1, t);
                double scale = std::fabs(lhs) + std::fabs((2.0 * n + 1.0) * laguerre(n, t)) +
                               std::fabs(n * laguerre(n - 1, t)) +
                               std::fabs((n + 1.0) * laguerre(n + 1, t)) + 1.0;
                max_rec = std::max(max_rec, std::fabs(lhs - rhs) / scale);
            }
        metrics["laguerre_recurrence_max_rel"] = max_rec;
        // Bessel vs integral representation
        QuadratureRule theta = gauss_legendre(256, 0.0, 3.14159265358979323846);
        double max_bessel = 0.0;
        for (int k = 0; k <= 100; ++k) {
            double x = 0.5 * k;
            double ref = quad_sum(theta, [&](double th) { return std::cos(x * std::sin(th)); }) /
                         3.14159265358979323846;
            max_bessel = std::max(max_bessel, std::fabs(bessel_j0(x) - ref));
        }
        metrics["bessel_j0_vs_quadrature_max_err"] = max_bessel;
        double tol = tolerance > 0.0 ? tolerance : 1e-10;
        pass = max_ortho < tol && max_rec < 1e-9 && max_bessel < 1e-10;
    } else if (check == "twisted") {
        // q_a *_tau q_a = (2pi/|tau|) q_a (eigenvalue = ||q||^2, pinned by
        // the norm law) and q_a *_tau q_b = 0 for a != b
        GridSpec spec{12.0, 96};
        double max_err = 0.0;
        for (double tau : {1.0, 2.0}) {
            const double lam = 2.0 * 3.14159265358979323846 / std::fabs(tau);
            for (int a = 0; a <= 2; ++a) {
                auto qa = [&](Complex v) {
                    return Complex(q_eval(tau, {a}, {v}), 0.0);
                };
                GridFunction conv = twisted_convolve(
                    [&](Complex v) { return qa(v); }, [&](Complex v) { return qa(v); }, tau,
                    spec);
                for (int i = 0; i < spec.n; ++i)
                    for (int j = 0; j < spec.n; ++j) {
                        Complex v(conv.axis_nodes[i], conv.axis_nodes[j]);
                        max_err = std::max(max_err, std::abs(conv.at(i, j) / lam - qa(v)));
                    }
                for (int b = 0; b <= 2; ++b) {
                    if (b == a) continue;
                    auto qb = [&](Complex v) { return Complex(q_eval(tau, {b}, {v}), 0.0); };
                    GridFunction zero = twisted_convolve(
                        [&](Complex v) { return qa(v); }, [&](Complex v) { return qb(v); }, tau,
                        spec);
                    for (const auto& val : zero.values)
                        max_err = std::max(max_err, std::abs(val) / lam);
                }
            }
        }
        metrics["twisted_idempotency_max_err"] = max_err;
        double tol = tolerance > 0.0 ? tolerance : 1e-6;
        pass = max_err < tol;
    } else if (check == "smh") {
        BiKFunction f = bik_from_mollifier(2.0);
        std::vector<Complex> zs = {{0.0, 0.0}, {0.5, 0.0}, {-0.5, 0.0}, {1.0, 0.0},
                                   {-1.0, 0.0}, {0.0, 2.0}, {0.0, 5.0}};
        SmhReport rep = verify_smh(f, zs);
        metrics["smh_max_rel_err"] = rep.max_rel_err;
        double tol = tolerance > 0.0 ? tolerance : 1e-5;
        pass = rep.max_rel_err < tol;
    } else if (check == "psf") {
        Scheme scheme = build_scheme(cfg);
        Window window = checked_window(cfg, scheme);
        PolyradialFunction f;
        double default_tol = 0.02;
        if (scheme.variant == Scheme::Variant::Abelian) {
            f = default_test_function(0);
        } else if (scheme.variant == Scheme::Variant::EuclideanMotion) {
            f = default_test_function(1);
            default_tol = 0.05;
        } else {
            f = default_test_function(1);
            default_tol = 0.05;
        }
        PsfReport rep = verify_psf(scheme, window, f, cfg.sampling.R, cfg.truncation);
        metrics["lhs"] = rep.lhs;
        metrics["rhs"] = rep.rhs;
        metrics["rel_err"] = rep.rel_err;
        metrics["rhs_horizontal"] = rep.rhs_horizontal;
        metrics["rhs_vertical"] = rep.rhs_vertical;
        metrics["dual_tail"] = rep.dual_tail;
        metrics["alpha_tail"] = rep.alpha_tail;
        metrics["sample_points"] = static_cast<double>(rep.sample_points);
        double tol = tolerance > 0.0 ? tolerance : default_tol;
        pass = rep.rel_err < tol;
    } else {
        throw ConfigError("unknown check: " + check);
    }

    auto os = open_out(outdir, "report.json");
    write_report_json(os, check, metrics, pass, config_hash(cfg));
    for (const auto& [k, v] : metrics) std::cout << k << ": " << v << "\n";
    std::cout << "pass: " << (pass ? "true" : "false") << "\n";
    return pass ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cut-and-project spherical diffraction toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", check = "psf";
    std::vector<std::string> formats;
    int threads = 0;
    double tolerance = 0.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--format", formats, "output formats (json,csv,plot)");
        sub->add_option("--threads", threads, "worker thread cap");
    };
    CLI::App* sp = app.add_subcommand("spectrum", "compute a diffraction spectrum");
    add_common(sp);
    CLI::App* pt = app.add_subcommand("points", "generate a model-set point cloud");
    add_common(pt);
    CLI::App* vf = app.add_subcommand("verify", "run a verification check");
    add_common(vf);
    vf->add_option("--check", check, "psf | specfun | twisted | smh");
    vf->add_option("--tolerance", tolerance, "pass/fail tolerance override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (threads > 0) set_thread_cap(threads);
        RunConfig cfg = load_config(config_path);
        if (!formats.empty()) cfg.output.formats = formats;
        if (sp->parsed()) return cmd_spectrum(cfg, out_dir);
        if (pt->parsed()) return cmd_points(cfg, out_dir);
        return cmd_verify(cfg, out_dir, check, tolerance);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const RegularityError& e) {
        std::cerr << "regularity error: " << e.what() << "\n";
        return 3;
    } catch (const AccuracyError& e) {
        std::cerr << "accuracy error: " << e.what() << " (bound " << e.measured_bound << ")\n";
        return 4;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
