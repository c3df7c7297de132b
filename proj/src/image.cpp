#include "latentcloak/image.hpp"

#include <cmath>

namespace latentcloak {

Image Image::from_flat(ImageShape s, Eigen::VectorXd values) {
    if (values.size() != s.size())
        throw IoError("image data size " + std::to_string(values.size()) +
                      " does not match shape " + std::to_string(s.size()));
    Image img;
    img.shape = s;
    img.data = std::move(values);
    return img;
}

void require_unit_range(const Image& img, const char* context) {
    for (Eigen::Index i = 0; i < img.data.size(); ++i) {
        const double v = img.data[i];
        if (!(v >= 0.0 && v <= 1.0))
            throw IoError(std::string(context) + ": pixel value " +
                          std::to_string(v) + " outside [0,1]");
    }
}

Image clamp01(Image img) {
    img.data = img.data.cwiseMax(0.0).cwiseMin(1.0);
    return img;
}

double gaussian_sigma_for_kernel(int ksize) {
    return 0.3 * ((ksize - 1) / 2.0 - 1.0) + 0.8;
}

Eigen::VectorXd gaussian_kernel_1d(int ksize) {
    if (ksize < 1 || ksize % 2 == 0)
        throw MetricError("kernel size must be odd and positive, got " +
                          std::to_string(ksize));
    if (ksize == 1) return Eigen::VectorXd::Ones(1);
    const double sigma = gaussian_sigma_for_kernel(ksize);
    const int r = ksize / 2;
    Eigen::VectorXd k(ksize);
    for (int i = -r; i <= r; ++i)
        k[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k /= k.sum();
    return k;
}

namespace {

inline int reflect_index(int i, int n) {
    // reflect without repeating the border sample: -1 -> 1, n -> n-2
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

Image separable_filter(const Image& img, const Eigen::VectorXd& taps) {
    const int r = static_cast<int>(taps.size()) / 2;
    const auto& s = img.shape;
    Image horiz(s);
    for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x)
            for (int c = 0; c < s.channels; ++c) {
                double acc = 0.0;
                for (int k = -r; k <= r; ++k)
                    acc += taps[k + r] * img.at(y, reflect_index(x + k, s.width), c);
                horiz.at(y, x, c) = acc;
            }
    Image out(s);
    for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x)
            for (int c = 0; c < s.channels; ++c) {
                double acc = 0.0;
                for (int k = -r; k <= r; ++k)
                    acc += taps[k + r] * horiz.at(reflect_index(y + k, s.height), x, c);
                out.at(y, x, c) = acc;
            }
    return out;
}

} // namespace

Image gaussian_blur(const Image& img, int ksize) {
    if (ksize == 1) return img;
    return separable_filter(img, gaussian_kernel_1d(ksize));
}

Image mean_filter(const Image& img, int ksize) {
    if (ksize < 1 || ksize % 2 == 0)
        throw MetricError("kernel size must be odd and positive, got " +
                          std::to_string(ksize));
    if (ksize == 1) return img;
    return separable_filter(img, Eigen::VectorXd::Constant(ksize, 1.0 / ksize));
}

Image quantize8(const Image& img) {
    Image out(img.shape);
    for (Eigen::Index i = 0; i < img.data.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, img.data[i]));
        out.data[i] = std::round(v * 255.0) / 255.0;
    }
    return out;
}

std::vector<std::uint8_t> to_rgb8(const Image& img) {
    if (img.shape.channels != 1 && img.shape.channels != 3)
        throw IoError("to_rgb8 supports 1- or 3-channel images");
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(img.shape.pixel_count()) * 3);
    std::size_t j = 0;
    for (int y = 0; y < img.shape.height; ++y)
        for (int x = 0; x < img.shape.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const int src_c = img.shape.channels == 1 ? 0 : c;
                const double v = std::min(1.0, std::max(0.0, img.at(y, x, src_c)));
                bytes[j++] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
    return bytes;
}

Image from_rgb8(ImageShape shape, const std::vector<std::uint8_t>& bytes) {
    if (shape.channels != 3)
        throw IoError("from_rgb8 expects a 3-channel shape");
    if (bytes.size() != static_cast<std::size_t>(shape.size()))
        throw IoError("from_rgb8: byte count does not match shape");
    Image img(shape);
    for (Eigen::Index i = 0; i < img.data.size(); ++i)
        img.data[i] = bytes[static_cast<std::size_t>(i)] / 255.0;
    return img;
}

} // namespace latentcloak
