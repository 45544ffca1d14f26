#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "polyp/labels.hpp"
#include "polyp/rng.hpp"

// Slide-level train/test partitioning. Patches never cross the split on their
// own; whatever a slide is assigned, every patch of that slide follows.

namespace polyp {

struct SlideSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

namespace detail {

// Shared allocator: per-group train counts by largest remainder, so the
// global count is exactly round(train_fraction * N) and every group stays
// within one slide of its own rounded target. Groups are processed in key
// order; remainder ties break toward the earlier key.
inline SlideSplit split_groups(const std::vector<std::vector<std::string>>& groups,
                               double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");

  std::size_t total = 0;
  for (const auto& g : groups) total += g.size();
  long want_train = static_cast<long>(std::floor(train_fraction * static_cast<double>(total) + 0.5));

  std::vector<long> base(groups.size());
  std::vector<double> remainder(groups.size());
  long allocated = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    double target = train_fraction * static_cast<double>(groups[i].size());
    base[i] = static_cast<long>(std::floor(target));
    remainder[i] = target - static_cast<double>(base[i]);
    allocated += base[i];
  }
  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (long extra = want_train - allocated; extra > 0; --extra) {
    // every group with spare capacity gets at most one extra slide
    for (std::size_t i : order) {
      if (base[i] < static_cast<long>(groups[i].size()) && remainder[i] >= 0.0) {
        base[i] += 1;
        remainder[i] = -1.0;
        break;
      }
    }
  }

  SlideSplit out;
  Rng rng(seed);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    std::vector<std::string> ids = groups[i];
    std::sort(ids.begin(), ids.end());
    shuffle(ids, rng);
    for (std::size_t k = 0; k < ids.size(); ++k)
      (static_cast<long>(k) < base[i] ? out.train : out.test).push_back(ids[k]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace detail

inline SlideSplit split_slides(const std::vector<std::string>& slide_ids,
                               double train_fraction, std::uint64_t seed) {
  std::vector<std::string> ids = slide_ids;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw data_error("duplicate slide id passed to split_slides");
  return detail::split_groups({ids}, train_fraction, seed);
}

// Stratified variant: one group per label, iterated in canonical label order.
inline SlideSplit split_slides(const std::map<std::string, PolypLabel>& slide_labels,
                               double train_fraction, std::uint64_t seed) {
  std::vector<std::vector<std::string>> groups;
  for (PolypLabel label : all_labels) {
    std::vector<std::string> g;
    for (const auto& [id, l] : slide_labels)
      if (l == label) g.push_back(id);
    if (!g.empty()) groups.push_back(std::move(g));
  }
  return detail::split_groups(groups, train_fraction, seed);
}

}  // namespace polyp
