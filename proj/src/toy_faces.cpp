#include "latentcloak/toy_faces.hpp"

#include <cmath>

#include "latentcloak/rng.hpp"

namespace latentcloak {

namespace {

// low-frequency cosine bump field added in place
void add_modes(Image& img, Rng& rng, double amplitude, int max_mode) {
    const auto& s = img.shape;
    for (int c = 0; c < s.channels; ++c)
        for (int p = 0; p <= max_mode; ++p)
            for (int q = 0; q <= max_mode; ++q) {
                if (p == 0 && q == 0) continue;
                const double a = amplitude * rng.normal();
                for (int y = 0; y < s.height; ++y)
                    for (int x = 0; x < s.width; ++x)
                        img.at(y, x, c) +=
                            a *
                            std::cos(M_PI * p * (y + 0.5) / s.height) *
                            std::cos(M_PI * q * (x + 0.5) / s.width);
            }
}

} // namespace

Image ToyFaceFamily::face(int identity_id, int variation_id) const {
    Image img(shape_, 0.5);
    Rng id_rng(mix_seed(seed_, 0xface0000ULL + static_cast<std::uint64_t>(identity_id)));
    add_modes(img, id_rng, identity_amplitude_, 2);
    if (variation_id != 0) {
        Rng var_rng(mix_seed(
            mix_seed(seed_, 0xva50000ULL + static_cast<std::uint64_t>(identity_id)),
            static_cast<std::uint64_t>(variation_id)));
        add_modes(img, var_rng, variation_amplitude_, 2);
    }
    return clamp01(std::move(img));
}

} // namespace latentcloak
