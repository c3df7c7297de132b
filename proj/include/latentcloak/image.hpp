#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "latentcloak/errors.hpp"

namespace latentcloak {

struct ImageShape {
    int height = 0;
    int width = 0;
    int channels = 0;

    int pixel_count() const { return height * width; }
    int size() const { return height * width * channels; }
    bool operator==(const ImageShape&) const = default;
};

/// Dense float image, values in [0,1]. Layout is row-major with interleaved
/// channels: index(y, x, c) = (y * width + x) * channels + c. flatten()
/// exposes that same order, which is the order every linear embedder and
/// codec in this library assumes.
struct Image {
    ImageShape shape;
    Eigen::VectorXd data;

    Image() = default;
    Image(ImageShape s, double fill = 0.0)
        : shape(s), data(Eigen::VectorXd::Constant(s.size(), fill)) {}

    double& at(int y, int x, int c) {
        return data[(static_cast<Eigen::Index>(y) * shape.width + x) * shape.channels + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<Eigen::Index>(y) * shape.width + x) * shape.channels + c];
    }

    const Eigen::VectorXd& flatten() const { return data; }

    static Image from_flat(ImageShape s, Eigen::VectorXd values);
};

/// Throws IoError unless every entry lies in [0,1].
void require_unit_range(const Image& img, const char* context);

Image clamp01(Image img);

/// Gaussian sigma used for a k x k smoothing kernel:
/// sigma = 0.3 * ((k - 1) / 2 - 1) + 0.8.
double gaussian_sigma_for_kernel(int ksize);

/// Normalized 1-D Gaussian taps of odd length ksize.
Eigen::VectorXd gaussian_kernel_1d(int ksize);

/// Separable Gaussian blur, reflect padding, per channel. ksize must be odd;
/// ksize == 1 is the identity.
Image gaussian_blur(const Image& img, int ksize);

/// Box filter, reflect padding, per channel. ksize must be odd.
Image mean_filter(const Image& img, int ksize);

/// 8-bit quantization round trip (used when comparing against images that
/// went through PNG).
Image quantize8(const Image& img);

std::vector<std::uint8_t> to_rgb8(const Image& img);
Image from_rgb8(ImageShape shape, const std::vector<std::uint8_t>& bytes);

} // namespace latentcloak
