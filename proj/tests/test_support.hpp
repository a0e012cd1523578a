#pragma once

// Helpers and independent oracles shared by the unit and acceptance suites.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "petnet/core.hpp"
#include "petnet/random.hpp"

namespace petnet::testing {

/// Up to `n` distinct random events (duplicates merge).
inline SpikeTrain random_train(GridShape shape, std::size_t n, Rng& rng) {
  std::vector<Event> events;
  events.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    events.push_back({static_cast<std::uint32_t>(rng.below(shape.timesteps)),
                      static_cast<std::uint32_t>(rng.below(shape.channels))});
  }
  return SpikeTrain::from_unsorted(shape, std::move(events));
}

/// Geometry features by brute force over every (crystal, offset, time).
inline SpikeTrain brute_force_geometry(const SpikeTrain& hits, std::uint32_t w) {
  const std::int64_t C = hits.shape().channels;
  const std::int64_t T = hits.shape().timesteps;
  std::vector<Event> out;
  for (std::int64_t c = 0; c < C; ++c) {
    for (std::int64_t t = 0; t < T; ++t) {
      bool lit = false;
      for (std::int64_t i = -static_cast<std::int64_t>(w);
           i <= static_cast<std::int64_t>(w) && !lit; ++i) {
        // Crystal c is lit if the crystal opposite (shifted by i) was hit.
        const std::int64_t src = (((c + C / 2 + i) % C) + C) % C;
        lit = hits.contains({static_cast<std::uint32_t>(t),
                             static_cast<std::uint32_t>(src)});
      }
      if (lit) {
        out.push_back({static_cast<std::uint32_t>(t),
                       static_cast<std::uint32_t>(c)});
      }
    }
  }
  return SpikeTrain::from_unsorted(hits.shape(), std::move(out));
}

/// Maximum bipartite matching size (Kuhn's augmenting paths) between
/// predicted and label spikes of the same crystal within `tolerance`.
inline std::uint64_t max_matching(const SpikeTrain& pred, const SpikeTrain& label,
                                  std::uint32_t tolerance) {
  const auto ps = pred.times_by_crystal();
  const auto ys = label.times_by_crystal();
  std::uint64_t total = 0;
  for (std::size_t c = 0; c < ps.size(); ++c) {
    const auto& p = ps[c];
    const auto& y = ys[c];
    std::vector<int> owner(y.size(), -1);
    std::function<bool(std::size_t, std::vector<bool>&)> augment =
        [&](std::size_t i, std::vector<bool>& seen) {
          for (std::size_t j = 0; j < y.size(); ++j) {
            const auto gap = p[i] > y[j] ? p[i] - y[j] : y[j] - p[i];
            if (gap > tolerance || seen[j]) continue;
            seen[j] = true;
            if (owner[j] < 0 ||
                augment(static_cast<std::size_t>(owner[j]), seen)) {
              owner[j] = static_cast<int>(i);
              return true;
            }
          }
          return false;
        };
    for (std::size_t i = 0; i < p.size(); ++i) {
      std::vector<bool> seen(y.size(), false);
      if (augment(i, seen)) ++total;
    }
  }
  return total;
}

/// Fresh, empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("petnet_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace petnet::testing
