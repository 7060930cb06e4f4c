#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "kernel.hpp"
#include "report.hpp"

namespace bdr {

namespace cache_detail {

inline std::string hex_bits(double x) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(x)));
  return buf;
}

constexpr char kGramMagic[8] = {'B', 'D', 'R', 'G', 'R', 'A', 'M', '1'};

struct GramHeader {
  char magic[8];
  std::int32_t rank;
  std::int32_t level;
  double epsilon;
  double t;
  std::uint64_t dim;
};

}  // namespace cache_detail

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
};

// On-disk store for Gram matrices keyed by (r, eps, t, k) and sphere pair statistics keyed by (r, n).
// Entries whose header or size does not match are deleted and recomputed.
class Cache {
 public:
  explicit Cache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }
  const CacheStats& stats() const { return stats_; }

  std::filesystem::path gram_path(const GroupContext& ctx, double t, int k) const {
    return dir_ / ("gram_r" + std::to_string(ctx.rank()) + "_e" + cache_detail::hex_bits(ctx.epsilon()) + "_t" +
                   cache_detail::hex_bits(t) + "_k" + std::to_string(k) + ".bin");
  }

  std::optional<GramMatrix> load_gram(const GroupContext& ctx, double t, int k) {
    const auto path = gram_path(ctx, t, k);
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open cache entry " + path.string());
    cache_detail::GramHeader h{};
    const std::uint64_t dim = level_dimension(ctx, k);
    f.read(reinterpret_cast<char*>(&h), sizeof h);
    const bool header_ok = f && std::memcmp(h.magic, cache_detail::kGramMagic, 8) == 0 && h.rank == ctx.rank() &&
                           h.level == k && h.epsilon == ctx.epsilon() && h.t == t && h.dim == dim;
    GramMatrix G{ctx.rank(), ctx.epsilon(), t, k, Eigen::MatrixXd(dim, dim)};
    if (header_ok) {
      f.read(reinterpret_cast<char*>(G.entries.data()), static_cast<std::streamsize>(dim * dim * sizeof(double)));
      const bool body_ok = f.gcount() == static_cast<std::streamsize>(dim * dim * sizeof(double)) &&
                           f.peek() == std::char_traits<char>::eof();
      if (body_ok) return G;
    }
    f.close();
    evict(path);
    return std::nullopt;
  }

  void store_gram(const GramMatrix& G) {
    cache_detail::GramHeader h{};
    std::memcpy(h.magic, cache_detail::kGramMagic, 8);
    h.rank = G.rank;
    h.level = G.level;
    h.epsilon = G.epsilon;
    h.t = G.t;
    h.dim = static_cast<std::uint64_t>(G.entries.rows());
    std::string bytes(reinterpret_cast<const char*>(&h), sizeof h);
    bytes.append(reinterpret_cast<const char*>(G.entries.data()), G.entries.size() * sizeof(double));
    GroupContext ctx(G.rank, G.epsilon);
    atomic_write(gram_path(ctx, G.t, G.level), bytes);
  }

  GramMatrix gram(const GroupContext& ctx, double t, int k) {
    if (auto G = load_gram(ctx, t, k)) {
      ++stats_.hits;
      return *G;
    }
    ++stats_.misses;
    GramMatrix G = gram_matrix(ctx, t, k);
    store_gram(G);
    return G;
  }

  std::filesystem::path pairs_path(const GroupContext& ctx, int n) const {
    return dir_ / ("pairs_r" + std::to_string(ctx.rank()) + "_n" + std::to_string(n) + ".txt");
  }

  // Counts of pairs in S_n x S_n with Gromov product m, m = 0..n.
  std::vector<BigInt> pair_counts(const GroupContext& ctx, int n) {
    const auto path = pairs_path(ctx, n);
    if (std::filesystem::exists(path)) {
      std::ifstream f(path);
      if (!f) throw IoError("cannot open cache entry " + path.string());
      std::string tag;
      int r = -1, nn = -1, version = -1;
      f >> tag >> version >> r >> nn;
      std::vector<BigInt> out;
      bool ok = f && tag == "bdr-pairs" && version == 1 && r == ctx.rank() && nn == n;
      for (int m = 0; ok && m <= n; ++m) {
        int mm = -1;
        std::string count;
        f >> mm >> count;
        ok = f && mm == m && !count.empty() &&
             count.find_first_not_of("0123456789") == std::string::npos;
        if (ok) out.emplace_back(count);
      }
      if (ok) {
        f >> std::ws;
        ok = f.peek() == std::char_traits<char>::eof();
      }
      if (ok) {
        ++stats_.hits;
        return out;
      }
      f.close();
      evict(path);
    }
    ++stats_.misses;
    std::vector<BigInt> out;
    std::ostringstream os;
    os << "bdr-pairs 1 " << ctx.rank() << " " << n << "\n";
    for (int m = 0; m <= n; ++m) {
      out.push_back(pair_count_sphere(ctx, n, m));
      os << m << " " << out.back() << "\n";
    }
    atomic_write(path, os.str());
    return out;
  }

 private:
  void evict(const std::filesystem::path& path) {
    std::error_code ec;
    std::filesystem::remove(path, ec);
    if (ec) throw IoError("cannot evict corrupt cache entry " + path.string() + ": " + ec.message());
    ++stats_.evictions;
  }

  std::filesystem::path dir_;
  CacheStats stats_;
};

}  // namespace bdr
