#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualdimer {

  using Vector = Eigen::VectorXd;
  using Matrix = Eigen::MatrixXd;

  /// Sorted, duplicate-free list of coordinate indices.
  using IndexSet = std::vector<std::size_t>;

  /// Returns {first, ..., last - 1}.
  IndexSet index_range(std::size_t first, std::size_t last);

  /**
   * @brief Parameter vector with a fixed split into a minimised block and a maximised block.
   *
   * The ``w_mask`` coordinates are descended, the ``alpha_mask`` coordinates are ascended. The two masks are disjoint and
   * together cover every index of ``values``.
   */
  struct ThetaVector {
    Vector values;
    IndexSet w_mask;
    IndexSet alpha_mask;

    ThetaVector() = default;
    ThetaVector(Vector v, IndexSet w, IndexSet alpha);

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }

    /// Throws std::invalid_argument when the masks overlap, leave a hole or point out of range.
    void validate() const;
  };

  /// v restricted to mask, scattered back into a full-length vector (zeros elsewhere).
  Vector masked(Vector const& v, IndexSet const& mask);

  /// Gathers the mask components of v into a compact vector.
  Vector gather(Vector const& v, IndexSet const& mask);

  /// Writes the compact vector block into the mask positions of out.
  void scatter(Vector const& block, IndexSet const& mask, Vector& out);

  /// Per-term loss values and weights, reported by objectives that have them.
  struct LossBreakdown {
    std::array<double, 4> losses{};
    std::array<double, 4> weights{};
  };

  /**
   * @brief The value-and-gradient contract every search consumes.
   *
   * Implementations may keep internal caches, so a single instance must not be shared between concurrently running
   * searches; distinct instances are independent.
   */
  class Objective {
  public:
    virtual ~Objective() = default;

    virtual std::size_t dim() const = 0;

    /// Returns E(theta) and writes dE/dtheta into grad (resized as needed).
    virtual double value_and_grad(Vector const& theta, Vector& grad) = 0;

    /// Loss terms of the most recent evaluation, if the objective has any.
    virtual std::optional<LossBreakdown> last_breakdown() const { return std::nullopt; }
  };

}  // namespace dualdimer
