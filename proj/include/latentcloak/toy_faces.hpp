#pragma once

#include "latentcloak/image.hpp"

namespace latentcloak {

/// Deterministic synthetic identities: smooth low-frequency images where
/// every identity is a base pattern and every shot of it adds a smaller
/// seeded deviation. Used by the desk-scale evaluation protocol in place of
/// real face datasets.
class ToyFaceFamily {
public:
    ToyFaceFamily(ImageShape shape, std::uint64_t seed,
                  double identity_amplitude = 0.16,
                  double variation_amplitude = 0.025)
        : shape_(shape), seed_(seed), identity_amplitude_(identity_amplitude),
          variation_amplitude_(variation_amplitude) {}

    ImageShape shape() const { return shape_; }

    /// Canonical image of an identity (variation 0).
    Image identity(int identity_id) const { return face(identity_id, 0); }

    /// A different shot of the same identity.
    Image face(int identity_id, int variation_id) const;

private:
    ImageShape shape_;
    std::uint64_t seed_;
    double identity_amplitude_;
    double variation_amplitude_;
};

} // namespace latentcloak
