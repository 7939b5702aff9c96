#include "dualdimer/objective.hpp"

#include <algorithm>

namespace dualdimer {

  IndexSet index_range(std::size_t first, std::size_t last) {
    IndexSet out;
    for (std::size_t i = first; i < last; ++i) {
      out.push_back(i);
    }
    return out;
  }

  ThetaVector::ThetaVector(Vector v, IndexSet w, IndexSet alpha)
      : values(std::move(v)), w_mask(std::move(w)), alpha_mask(std::move(alpha)) {
    validate();
  }

  void ThetaVector::validate() const {
    std::vector<int> seen(size(), 0);
    for (IndexSet const* mask : {&w_mask, &alpha_mask}) {
      for (std::size_t i : *mask) {
        if (i >= size()) {
          throw std::invalid_argument("ThetaVector: mask index " + std::to_string(i) + " out of range");
        }
        if (seen[i]++) {
          throw std::invalid_argument("ThetaVector: index " + std::to_string(i) + " appears twice across masks");
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw std::invalid_argument("ThetaVector: masks do not cover every coordinate");
    }
  }

  Vector masked(Vector const& v, IndexSet const& mask) {
    Vector out = Vector::Zero(v.size());
    for (std::size_t i : mask) {
      out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(i)];
    }
    return out;
  }

  Vector gather(Vector const& v, IndexSet const& mask) {
    Vector out(static_cast<Eigen::Index>(mask.size()));
    for (std::size_t k = 0; k < mask.size(); ++k) {
      out[static_cast<Eigen::Index>(k)] = v[static_cast<Eigen::Index>(mask[k])];
    }
    return out;
  }

  void scatter(Vector const& block, IndexSet const& mask, Vector& out) {
    for (std::size_t k = 0; k < mask.size(); ++k) {
      out[static_cast<Eigen::Index>(mask[k])] = block[static_cast<Eigen::Index>(k)];
    }
  }

}  // namespace dualdimer
