#pragma once

#include "deepdetect/image.hpp"

#include <utility>

namespace deepdetect {

// BT.601 luma.
GrayImage rgb_to_gray(const RgbImage& img);

// Replicates each luma value into R, G and B after rounding and clamping.
RgbImage gray_to_rgb(const GrayImage& img);

// Normalized sampled Gaussian with radius ceil(3 sigma).
std::vector<float> gaussian_kernel(double sigma);

// Separable Gaussian, reflect-101 borders. Throws InvalidArgument for sigma <= 0.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

struct Gradients {
  GrayImage gx;
  GrayImage gy;
};

// 3x3 Sobel with reflect-101 borders. Requires width, height >= 3.
Gradients sobel_gradients(const GrayImage& img);

// Bilinear resampling to an explicit size (pixel-center aligned).
GrayImage resize_bilinear(const GrayImage& img, int width, int height);
RgbImage resize_bilinear(const RgbImage& img, int width, int height);
BinaryMask resize_nearest(const BinaryMask& mask, int width, int height);

// Bilinear sample at a sub-pixel location with reflect-101 outside the raster.
float sample_bilinear(const GrayImage& img, double x, double y);

// Contrast about mid-gray plus brightness offset:
// v -> clamp(round(alpha * (v - 128) + 128 + beta), 0, 255).
// alpha in (0, 1], beta in [-128, 0].
RgbImage degrade_photometric(const RgbImage& img, double alpha, double beta);

// Mean and population standard deviation of luma.
std::pair<double, double> luma_statistics(const GrayImage& img);

}  // namespace deepdetect
