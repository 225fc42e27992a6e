#include "acr/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "acr/error.hpp"

namespace acr {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr std::array<char, 8> kMagic = {'A', 'C', 'R', 'C', 'K', 'P', 'T', '\n'};

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError("checkpoint: truncated file", 0, 0);
  return value;
}

void put_tensor(std::ostream& out, const Tensor2& t) {
  put<std::uint64_t>(out, t.rows());
  put<std::uint64_t>(out, t.cols());
  out.write(reinterpret_cast<const char*>(t.values().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor2 get_tensor(std::istream& in) {
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  if (rows > (1ULL << 28) || cols > (1ULL << 28)) throw ParseError("checkpoint: implausible shape", 0, 0);
  std::vector<double> data(rows * cols);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!in) throw ParseError("checkpoint: truncated tensor data", 0, 0);
  return Tensor2(rows, cols, std::move(data));
}

}  // namespace

void write_checkpoint(std::ostream& out, const Network& net) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.extractor.depth()));
  for (const Tensor2* p : parameter_list(net)) put_tensor(out, *p);
}

Network read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ParseError("checkpoint: bad magic", 0, 0);
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(version), 0, 0);
  }
  const auto depth = get<std::uint32_t>(in);
  std::vector<DenseLayer> layers;
  for (std::uint32_t i = 0; i < depth; ++i) {
    Tensor2 w = get_tensor(in);
    Tensor2 b = get_tensor(in);
    layers.push_back({std::move(w), std::move(b)});
  }
  Network net;
  net.extractor = MlpExtractor(std::move(layers));
  net.head.weight = get_tensor(in);
  net.head.bias = get_tensor(in);
  if (net.head.bias.rows() != 1 || net.head.bias.cols() != net.head.weight.rows() ||
      net.head.weight.cols() != net.extractor.output_dim()) {
    throw ParseError("checkpoint: head shape inconsistent with extractor", 0, 0);
  }
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, net);
  if (!out) throw Error("write failed: " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace acr
