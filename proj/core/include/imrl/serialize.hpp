#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "imrl/agent.hpp"
#include "imrl/nn.hpp"

namespace imrl::io {

/// FNV-1a 64-bit digest as fixed-width hex.
std::string checksum_hex(std::span<const unsigned char> bytes);

// Parameter blobs are flat little-endian IEEE-754 doubles in layer order,
// weights row-major then biases, regardless of host endianness.
std::vector<unsigned char> pack_doubles_le(std::span<const double> values);
std::vector<double> unpack_doubles_le(std::span<const unsigned char> bytes);

void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes);
std::vector<unsigned char> read_file(const std::filesystem::path& path);

/// JSON manifest describing one serialized net.
struct NetManifest {
    std::string file;
    std::vector<int> layer_sizes;
    std::string activation;
    std::string checksum;
};

NetManifest save_net(const std::filesystem::path& dir, const std::string& name,
                     const nn::DenseNet& net);
nn::DenseNet load_net(const std::filesystem::path& dir, const NetManifest& manifest);

struct AdamManifest {
    std::string file;
    long step = 0;
    double lr = 0.0;
};

AdamManifest save_adam(const std::filesystem::path& dir, const std::string& name,
                       const nn::AdamState& state);
nn::AdamState load_adam(const std::filesystem::path& dir, const AdamManifest& manifest,
                        const nn::DenseNet& shape);

void save_buffer(const std::filesystem::path& path, const agent::ReplayBuffer& buffer);
agent::ReplayBuffer load_buffer(const std::filesystem::path& path, std::size_t capacity);

} // namespace imrl::io
