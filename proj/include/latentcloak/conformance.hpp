#pragma once

#include "latentcloak/backend.hpp"

namespace latentcloak {

struct ConformanceOptions {
    int trials = 8;
    std::uint64_t seed = 7;
    // Analytic backends must pass finite-difference gradient checks;
    // production adapters may disable them and are then only held to the
    // shape and row-stochasticity contracts.
    bool check_gradients = true;
    double fd_step = 1e-4;
    double gradient_tol = 1e-4;
    double row_sum_tol = 1e-6;
};

struct ConformanceReport {
    int checks_run = 0;
    double max_gradient_rel_err = 0.0;
    double max_row_sum_err = 0.0;
};

/// Shared contract checks every denoiser backend must pass. Throws
/// BackendError with a diagnostic on the first violation.
ConformanceReport run_backend_conformance(const DenoiserBackend& backend,
                                          const ConformanceOptions& opts = {});

/// Round-trip and gradient checks for codecs, against the codec's declared
/// tolerance.
ConformanceReport run_codec_conformance(const LatentCodec& codec,
                                        const ConformanceOptions& opts = {});

} // namespace latentcloak
