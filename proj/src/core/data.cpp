#include "data.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "error.hpp"
#include "oracle.hpp"

namespace bml {

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::mnist: return "mnist";
        case Provenance::artificial: return "artificial";
        case Provenance::file: return "file";
    }
    return "file";
}

BinaryDataSet::BinaryDataSet(std::size_t dim, std::vector<std::uint8_t> bits, Provenance provenance)
    : dim_(dim), bits_(std::move(bits)), provenance_(provenance) {
    require(dim > 0, ErrorCode::invalid_argument, "data vectors must have at least one entry");
    require(!bits_.empty() && bits_.size() % dim == 0, ErrorCode::invalid_argument,
            "data set must hold at least one complete vector");
    for (auto b : bits_) require(b <= 1, ErrorCode::invalid_argument, "data entries must be 0 or 1");
}

BinaryDataSet BinaryDataSet::head(std::size_t count) const {
    const std::size_t k = std::min(count, size());
    return BinaryDataSet(dim_, std::vector<std::uint8_t>(bits_.begin(), bits_.begin() + static_cast<std::ptrdiff_t>(k * dim_)),
                         provenance_);
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    require(bytes.size() >= offset + 4, ErrorCode::parse_error, "IDX header truncated");
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    const std::string s = read_file(path);
    return {s.begin(), s.end()};
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
    const std::uint32_t magic = read_be32(bytes, 0);
    require(magic == 0x00000803, ErrorCode::parse_error, "bad IDX image magic number " + std::to_string(magic));
    IdxImages img;
    img.count = read_be32(bytes, 4);
    img.rows = read_be32(bytes, 8);
    img.cols = read_be32(bytes, 12);
    // Each factor is below 2^32, so the product of the first two fits; guard the third.
    const std::size_t per_image = img.rows * img.cols;
    require(per_image == 0 || img.count <= (bytes.size() - 16) / per_image, ErrorCode::parse_error,
            "IDX image payload truncated: header promises " + std::to_string(img.count) + " images");
    const std::size_t payload = img.count * per_image;
    require(bytes.size() - 16 >= payload, ErrorCode::parse_error,
            "IDX image payload truncated: header promises " + std::to_string(payload) + " bytes");
    require(bytes.size() - 16 == payload, ErrorCode::parse_error, "IDX image file has trailing bytes");
    img.pixels.assign(bytes.begin() + 16, bytes.end());
    return img;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
    const std::uint32_t magic = read_be32(bytes, 0);
    require(magic == 0x00000801, ErrorCode::parse_error, "bad IDX label magic number " + std::to_string(magic));
    const std::size_t count = read_be32(bytes, 4);
    require(bytes.size() - 8 == count, ErrorCode::parse_error, "IDX label payload does not match its count");
    return {bytes.begin() + 8, bytes.end()};
}

BinaryDataSet binarize_images(const IdxImages& images, const BinarizeOptions& options) {
    const std::size_t dim = images.rows * images.cols;
    std::size_t count = images.count;
    if (options.limit > 0) count = std::min(count, options.limit);
    require(count > 0 && dim > 0, ErrorCode::invalid_argument, "IDX file holds no images");
    std::vector<std::uint8_t> bits(count * dim);
    for (std::size_t k = 0; k < bits.size(); ++k) bits[k] = binarize(images.pixels[k], options);
    return BinaryDataSet(dim, std::move(bits), Provenance::mnist);
}

BinaryDataSet load_mnist_idx(const std::string& images_path, const std::optional<std::string>& labels_path,
                             const BinarizeOptions& options) {
    const auto bytes = read_bytes(images_path);
    const IdxImages images = parse_idx_images(bytes);
    if (labels_path) {
        const auto labels = parse_idx_labels(read_bytes(*labels_path));
        require(labels.size() == images.count, ErrorCode::dimension_mismatch,
                "label count " + std::to_string(labels.size()) + " differs from image count " +
                    std::to_string(images.count));
    }
    return binarize_images(images, options);
}

TargetDistribution make_artificial_target(std::uint64_t seed, std::size_t visible, TargetKind kind) {
    require(visible >= 1 && visible <= 20, ErrorCode::invalid_argument, "artificial target supports 1..20 visible units");
    TargetDistribution dist;
    dist.visible = visible;
    dist.seed = seed;
    dist.kind = kind;
    const std::size_t states = std::size_t{1} << visible;
    if (kind == TargetKind::exponential) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(Phase::data), 1));
        dist.probs.resize(states);
        for (double& p : dist.probs) {
            double u = rng.uniform();
            while (u <= 0.0) u = rng.uniform();
            p = -std::log(u);
        }
    } else {
        // A 20-unit teacher shaped like the learner (visible + 7 hidden),
        // unit-scale couplings and biases.
        const std::size_t units = visible + 7;
        BoltzmannMachine teacher = init_random(units, visible, mix_seed(seed, 2), 1.0);
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(Phase::data), 3));
        for (std::size_t i = 0; i < units; ++i) teacher.set_bias(i, rng.normal() - 0.5);
        dist.probs = visible_marginal_exact(teacher, std::max(enumeration_cap(), units));
    }
    double total = 0.0;
    for (double p : dist.probs) total += p;
    for (double& p : dist.probs) p /= total;
    return dist;
}

BinaryDataSet sample_target(const TargetDistribution& dist, std::size_t count, Rng& rng) {
    require(count >= 1, ErrorCode::invalid_argument, "need at least one sample");
    std::vector<double> cdf(dist.probs.size());
    std::partial_sum(dist.probs.begin(), dist.probs.end(), cdf.begin());
    std::vector<std::uint8_t> bits(count * dist.visible);
    for (std::size_t k = 0; k < count; ++k) {
        const double u = rng.uniform() * cdf.back();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        // Skip zero-probability codes that share the previous CDF value.
        std::size_t code = static_cast<std::size_t>(std::min(it, cdf.end() - 1) - cdf.begin());
        while (dist.probs[code] == 0.0 && code + 1 < cdf.size()) ++code;
        for (std::size_t i = 0; i < dist.visible; ++i) bits[k * dist.visible + i] = (code >> i) & 1U;
    }
    return BinaryDataSet(dist.visible, std::move(bits), Provenance::artificial);
}

std::vector<double> empirical_distribution(const BinaryDataSet& data) {
    require(data.dim() <= enumeration_cap(), ErrorCode::cap_exceeded, "data dimension too large for a full table");
    std::vector<double> p(std::size_t{1} << data.dim(), 0.0);
    for (std::size_t k = 0; k < data.size(); ++k) p[state_code(data.row(k))] += 1.0;
    for (double& v : p) v /= static_cast<double>(data.size());
    return p;
}

std::string dataset_to_text(const BinaryDataSet& data) {
    std::string out = "DS " + std::to_string(data.size()) + " " + std::to_string(data.dim()) + "\n";
    out.reserve(out.size() + data.size() * (data.dim() + 1));
    for (std::size_t k = 0; k < data.size(); ++k) {
        for (auto b : data.row(k)) out.push_back(b ? '1' : '0');
        out.push_back('\n');
    }
    return out;
}

BinaryDataSet dataset_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse_error, "empty data set stream");
    std::istringstream header(line);
    std::string tag;
    long long count = 0;
    long long dim = 0;
    std::string extra;
    header >> tag >> count >> dim;
    require(!header.fail() && tag == "DS" && !(header >> extra), ErrorCode::parse_error,
            "data set header must be 'DS <K> <m>'");
    require(count > 0 && dim > 0, ErrorCode::parse_error, "data set header has invalid counts");
    std::vector<std::uint8_t> bits;
    bits.reserve(static_cast<std::size_t>(count * dim));
    for (long long k = 0; k < count; ++k) {
        require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse_error,
                "data set truncated: expected " + std::to_string(count) + " vectors, got " + std::to_string(k));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        require(line.size() == static_cast<std::size_t>(dim), ErrorCode::parse_error,
                "data set line " + std::to_string(k + 2) + " has " + std::to_string(line.size()) + " entries");
        for (char c : line) {
            require(c == '0' || c == '1', ErrorCode::parse_error,
                    "non-binary character in data set line " + std::to_string(k + 2));
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        }
    }
    while (std::getline(in, line))
        require(line.empty() || line == "\r", ErrorCode::parse_error, "data set has more vectors than its header");
    return BinaryDataSet(static_cast<std::size_t>(dim), std::move(bits), Provenance::file);
}

void save_dataset_file(const BinaryDataSet& data, const std::string& path) {
    write_file_atomic(path, dataset_to_text(data));
}

BinaryDataSet load_dataset_file(const std::string& path) { return dataset_from_text(read_file(path)); }

std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, const Streams& streams) {
    require(batch_size >= 1, ErrorCode::invalid_argument, "batch size must be at least 1");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = streams.rng(0, Phase::shuffle);
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < count; start += batch_size) {
        const std::size_t end = std::min(count, start + batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace bml
