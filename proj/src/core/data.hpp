#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "machine.hpp"
#include "rng.hpp"

namespace bml {

enum class Provenance { mnist, artificial, file };

const char* to_string(Provenance p);

// K binary vectors of a common length m.
class BinaryDataSet {
public:
    BinaryDataSet(std::size_t dim, std::vector<std::uint8_t> bits, Provenance provenance = Provenance::file);

    std::size_t size() const { return bits_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    Provenance provenance() const { return provenance_; }
    StateView row(std::size_t k) const { return {bits_.data() + k * dim_, dim_}; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    // First `count` vectors (all of them when count >= size()).
    BinaryDataSet head(std::size_t count) const;

    bool operator==(const BinaryDataSet& other) const { return dim_ == other.dim_ && bits_ == other.bits_; }

private:
    std::size_t dim_;
    std::vector<std::uint8_t> bits_;
    Provenance provenance_;
};

// ---- IDX (MNIST) -------------------------------------------------------

struct IdxImages {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
};

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

struct BinarizeOptions {
    int threshold = 128;
    bool inclusive = true;  // pixel >= threshold -> 1; otherwise pixel > threshold -> 1
    std::size_t limit = 0;  // keep only the first `limit` images; 0 keeps all
};

inline std::uint8_t binarize(std::uint8_t pixel, const BinarizeOptions& opt) {
    return opt.inclusive ? (pixel >= opt.threshold) : (pixel > opt.threshold);
}

BinaryDataSet binarize_images(const IdxImages& images, const BinarizeOptions& options = {});

// Labels are parsed and checked against the image count when given, but not kept.
BinaryDataSet load_mnist_idx(const std::string& images_path, const std::optional<std::string>& labels_path = {},
                             const BinarizeOptions& options = {});

// ---- artificial target -------------------------------------------------

enum class TargetKind {
    exponential,  // i.i.d. Exponential(1) table, normalized
    teacher,      // visible marginal of a seeded random Boltzmann machine
};

struct TargetDistribution {
    std::size_t visible = 13;
    std::vector<double> probs;  // 2^visible entries indexed by state code
    std::uint64_t seed = 0;
    TargetKind kind = TargetKind::exponential;
};

TargetDistribution make_artificial_target(std::uint64_t seed, std::size_t visible = 13,
                                          TargetKind kind = TargetKind::exponential);

// K i.i.d. draws by inverse CDF over the table.
BinaryDataSet sample_target(const TargetDistribution& dist, std::size_t count, Rng& rng);

// Empirical distribution over the 2^m visible codes.
std::vector<double> empirical_distribution(const BinaryDataSet& data);

// ---- persistence -------------------------------------------------------

// Text format: "DS <K> <m>" then K lines of m characters from {0,1}.
std::string dataset_to_text(const BinaryDataSet& data);
BinaryDataSet dataset_from_text(const std::string& text);
void save_dataset_file(const BinaryDataSet& data, const std::string& path);
BinaryDataSet load_dataset_file(const std::string& path);

// ---- mini-batches ------------------------------------------------------

// Seeded shuffle of [0, count) cut into contiguous slices of batch_size; the
// last slice may be short. The permutation comes from streams.rng(0, shuffle).
std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, const Streams& streams);

}  // namespace bml
