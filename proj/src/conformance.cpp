#include "latentcloak/conformance.hpp"

#include <cmath>

#include "latentcloak/rng.hpp"

namespace latentcloak {

namespace {

double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-12});
    return std::abs(a - b) / denom;
}

void fail(const std::string& what) { throw BackendError("conformance: " + what); }

} // namespace

ConformanceReport run_backend_conformance(const DenoiserBackend& backend,
                                          const ConformanceOptions& opts) {
    ConformanceReport report;
    Rng rng(mix_seed(opts.seed, 0xc0f));
    const int d = backend.latent_dim();
    const int m = backend.embedding_dim();
    const auto sites = backend.attention_sites();

    for (int trial = 0; trial < opts.trials; ++trial) {
        const int t = 1 + trial % backend.num_timesteps();
        const Eigen::VectorXd z = 0.4 * rng.normal_vector(d);
        const Eigen::VectorXd e = 0.4 * rng.normal_vector(m);

        const Eigen::VectorXd eps = backend.predict_noise(z, t, e);
        if (eps.size() != d) fail("predict_noise output shape != latent shape");
        if (!eps.allFinite()) fail("predict_noise produced non-finite values");
        ++report.checks_run;

        const auto maps = backend.capture_attention(z, t, e);
        std::size_t expected_maps = 0;
        for (const auto& s : sites)
            expected_maps += static_cast<std::size_t>(s.head_count);
        if (maps.size() != expected_maps)
            fail("capture_attention map count does not match declared sites");
        for (const auto& map : maps) {
            if (map.minCoeff() < 0.0) fail("attention entries must be >= 0");
            for (Eigen::Index r = 0; r < map.rows(); ++r) {
                const double err = std::abs(map.row(r).sum() - 1.0);
                report.max_row_sum_err = std::max(report.max_row_sum_err, err);
                if (err > opts.row_sum_tol) fail("attention row not stochastic");
            }
        }
        ++report.checks_run;

        if (!opts.check_gradients) continue;
        const double h = opts.fd_step;
        const Eigen::VectorXd cot = rng.normal_vector(d);

        {
            const Eigen::VectorXd dir = rng.normal_vector(d).normalized();
            const double analytic = backend.predict_noise_vjp_z(z, t, e, cot).dot(dir);
            const double plus = cot.dot(backend.predict_noise(z + h * dir, t, e));
            const double minus = cot.dot(backend.predict_noise(z - h * dir, t, e));
            const double numeric = (plus - minus) / (2.0 * h);
            const double err = rel_err(analytic, numeric);
            report.max_gradient_rel_err = std::max(report.max_gradient_rel_err, err);
            if (err > opts.gradient_tol) fail("d eps / d z mismatch vs finite differences");
            ++report.checks_run;
        }
        {
            const Eigen::VectorXd dir = rng.normal_vector(m).normalized();
            const double analytic = backend.predict_noise_vjp_e(z, t, e, cot).dot(dir);
            const double plus = cot.dot(backend.predict_noise(z, t, e + h * dir));
            const double minus = cot.dot(backend.predict_noise(z, t, e - h * dir));
            const double numeric = (plus - minus) / (2.0 * h);
            const double err = rel_err(analytic, numeric);
            report.max_gradient_rel_err = std::max(report.max_gradient_rel_err, err);
            if (err > opts.gradient_tol) fail("d eps / d e mismatch vs finite differences");
            ++report.checks_run;
        }
        if (!maps.empty()) {
            std::vector<Eigen::MatrixXd> map_cot;
            map_cot.reserve(maps.size());
            for (const auto& map : maps)
                map_cot.push_back(rng.normal_matrix(map.rows(), map.cols()));
            const Eigen::VectorXd dir = rng.normal_vector(d).normalized();
            const double analytic = backend.attention_vjp_z(z, t, e, map_cot).dot(dir);
            auto probe = [&](const Eigen::VectorXd& zz) {
                const auto mm = backend.capture_attention(zz, t, e);
                double acc = 0.0;
                for (std::size_t i = 0; i < mm.size(); ++i)
                    acc += map_cot[i].cwiseProduct(mm[i]).sum();
                return acc;
            };
            const double numeric = (probe(z + h * dir) - probe(z - h * dir)) / (2.0 * h);
            const double err = rel_err(analytic, numeric);
            report.max_gradient_rel_err = std::max(report.max_gradient_rel_err, err);
            if (err > opts.gradient_tol) fail("attention VJP mismatch vs finite differences");
            ++report.checks_run;
        }
    }
    return report;
}

ConformanceReport run_codec_conformance(const LatentCodec& codec,
                                        const ConformanceOptions& opts) {
    ConformanceReport report;
    Rng rng(mix_seed(opts.seed, 0xc0dec0f));
    const auto shape = codec.image_shape();

    for (int trial = 0; trial < opts.trials; ++trial) {
        Image x(shape);
        for (Eigen::Index i = 0; i < x.data.size(); ++i)
            x.data[i] = rng.uniform(0.45, 0.55);

        const Eigen::VectorXd z = codec.encode(x);
        if (z.size() != codec.latent_dim()) fail("encode output size != latent_dim");
        const Image back = codec.decode(z);
        const double err = (back.flatten() - x.flatten()).norm();
        if (err > codec.round_trip_tolerance() + 1e-12)
            fail("codec round trip exceeds declared tolerance");
        ++report.checks_run;

        if (!opts.check_gradients) continue;
        const double h = opts.fd_step;
        const Eigen::VectorXd cot = rng.normal_vector(shape.size());
        const Eigen::VectorXd dir = rng.normal_vector(z.size()).normalized();
        const double analytic = codec.decode_vjp(z, cot).dot(dir);
        const double plus = cot.dot(codec.decode(z + h * dir).flatten());
        const double minus = cot.dot(codec.decode(z - h * dir).flatten());
        const double numeric = (plus - minus) / (2.0 * h);
        const double rerr = rel_err(analytic, numeric);
        report.max_gradient_rel_err = std::max(report.max_gradient_rel_err, rerr);
        if (rerr > opts.gradient_tol) fail("decode VJP mismatch vs finite differences");
        ++report.checks_run;
    }
    return report;
}

} // namespace latentcloak
