#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "core/gibbs.hpp"
#include "core/json_config.hpp"

namespace cfm {

namespace {

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
  const uint64_t v = std::bit_cast<uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

double get_f64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return std::bit_cast<double>(v);
}

void put_f64_block(std::string& out, const std::vector<double>& v) {
  for (double d : v) put_f64(out, d);
}

}  // namespace

void save_chain(const PosteriorChain& chain, const std::string& path) {
  if (chain.draws == 0) fail(ErrorKind::InvalidArgument, "refusing to write an empty chain");

  // narrowest signed width that holds every retained wrap count
  int16_t zmin = 0, zmax = 0;
  for (int16_t z : chain.wrap_draws) {
    zmin = std::min(zmin, z);
    zmax = std::max(zmax, z);
  }
  const uint32_t zbytes = (zmin >= -128 && zmax <= 127) ? 1 : 2;

  std::string blob;
  blob += "CFC1";
  put_u32(blob, static_cast<uint32_t>(chain.subjects));
  put_u32(blob, static_cast<uint32_t>(chain.channels));
  put_u32(blob, static_cast<uint32_t>(chain.times));
  put_u32(blob, static_cast<uint32_t>(chain.basis_size));
  put_u32(blob, static_cast<uint32_t>(chain.draws));
  put_u32(blob, zbytes);
  put_f64_block(blob, chain.coeff_draws);
  for (int16_t z : chain.wrap_draws) {
    blob.push_back(static_cast<char>(z & 0xFF));
    if (zbytes == 2) blob.push_back(static_cast<char>((z >> 8) & 0xFF));
  }
  put_f64_block(blob, chain.sigma2_draws);
  put_f64_block(blob, chain.beta_trace);
  put_f64_block(blob, chain.tau2_trace);
  put_f64_block(blob, chain.gamma2_trace);

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) fail(ErrorKind::Io, "short write to '" + path + "'");

  nlohmann::json side{{"format", "CFC1"},
                      {"subjects", chain.subjects},
                      {"channels", chain.channels},
                      {"times", chain.times},
                      {"basis_size", chain.basis_size},
                      {"draws", chain.draws},
                      {"wrap_bytes", zbytes},
                      {"chain", chain_to_json(chain.config)},
                      {"hyper", hyper_to_json(chain.hyper)},
                      {"basis", spline_to_json(chain.basis)},
                      {"grid", grid_to_json(chain.grid)}};
  std::ofstream meta(path + ".json");
  if (!meta) fail(ErrorKind::Io, "cannot open '" + path + ".json' for writing");
  meta << side.dump(2) << "\n";
  if (!meta) fail(ErrorKind::Io, "short write to '" + path + ".json'");
}

PosteriorChain load_chain(const std::string& path) {
  std::ifstream meta_in(path + ".json");
  if (!meta_in) fail(ErrorKind::Io, "cannot open '" + path + ".json' for reading");
  std::string meta_text((std::istreambuf_iterator<char>(meta_in)), std::istreambuf_iterator<char>());
  const nlohmann::json side = parse_json_text(meta_text, path + ".json");

  PosteriorChain chain;
  chain.config = chain_from_json(side.at("chain"));
  chain.hyper = hyper_from_json(side.at("hyper"));
  chain.basis = spline_from_json(side.at("basis"));
  chain.grid = grid_from_json(side.at("grid"));

  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() < 28 || blob.compare(0, 4, "CFC1") != 0)
    fail(ErrorKind::Parse, path + ": not a CFC1 chain container");
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
  chain.subjects = get_u32(p + 4);
  chain.channels = get_u32(p + 8);
  chain.times = get_u32(p + 12);
  chain.basis_size = get_u32(p + 16);
  chain.draws = get_u32(p + 20);
  const uint32_t zbytes = get_u32(p + 24);
  if (zbytes != 1 && zbytes != 2) fail(ErrorKind::Parse, path + ": unsupported wrap storage width");
  if (chain.basis.size() != chain.basis_size || chain.grid.count() != chain.times)
    fail(ErrorKind::Parse, path + ": sidecar does not match the binary header");

  const size_t d = chain.draws, n = chain.subjects, ch = chain.channels, t = chain.times,
               big = chain.basis_size;
  const size_t n_coeff = d * n * ch * big;
  const size_t n_wrap = d * n * ch * t;
  const size_t expect = 28 + n_coeff * 8 + n_wrap * zbytes + d * 8 + 3 * d * big * 8;
  if (blob.size() != expect)
    fail(ErrorKind::Parse, path + ": payload size does not match the declared dimensions");

  size_t off = 28;
  auto read_f64 = [&](std::vector<double>& out, size_t count) {
    out.resize(count);
    for (size_t i = 0; i < count; ++i, off += 8) out[i] = get_f64(p + off);
  };
  read_f64(chain.coeff_draws, n_coeff);
  chain.wrap_draws.resize(n_wrap);
  for (size_t i = 0; i < n_wrap; ++i) {
    if (zbytes == 1) {
      chain.wrap_draws[i] = static_cast<int8_t>(p[off]);
      off += 1;
    } else {
      chain.wrap_draws[i] =
          static_cast<int16_t>(static_cast<uint16_t>(p[off]) | static_cast<uint16_t>(p[off + 1]) << 8);
      off += 2;
    }
  }
  read_f64(chain.sigma2_draws, d);
  read_f64(chain.beta_trace, d * big);
  read_f64(chain.tau2_trace, d * big);
  read_f64(chain.gamma2_trace, d * big);
  return chain;
}

}  // namespace cfm
