#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "splitstep/particle_state.hpp"

namespace splitstep {

/// Philox4x32-10 counter-based generator.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Uniform on (0,1) from the top 52 bits: ((x >> 12) + 0.5) * 2^-52, so both ends stay strictly inside.
double to_open_unit(std::uint64_t x);

/// Standard normal by inverting the CDF of an open-unit uniform.
double normal_quantile(double u);

/// Stream tags keep independent families of draws apart under one seed.
enum class Stream : std::uint32_t { brownian = 0, initial = 1 };

/// Two independent open-unit uniforms addressed by (seed, stream, a, b, block).
std::array<double, 2> counter_uniforms(std::uint64_t seed, std::uint32_t stream, std::uint64_t a, std::uint32_t b,
                                       std::uint32_t block);

/// Brownian increments on the finest grid. Increment (i, k, c) is a pure function of
/// (seed, i, k, c); nothing depends on N, traversal order or thread count.
class BrownianLattice {
 public:
  BrownianLattice(std::uint64_t seed, std::size_t particles, std::size_t noise_dim, double h_fine,
                  std::size_t fine_steps);

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t particles() const noexcept { return n_; }
  std::size_t noise_dim() const noexcept { return l_; }
  double h_fine() const noexcept { return h_fine_; }
  std::size_t fine_steps() const noexcept { return m_fine_; }
  double horizon() const noexcept { return h_fine_ * static_cast<double>(m_fine_); }

  /// Fine increment of particle i, fine step k, component c (variance h_fine).
  double fine_increment(std::size_t i, std::size_t k, std::size_t c) const;

  /// Number of fine steps in one coarse step of size h; NonCommensurate unless h/h_fine is
  /// an integer to within one ulp of the quotient.
  std::size_t ratio(double h) const;

  /// Increment of particle i over coarse step n of size h: the h/h_fine fine increments of
  /// [n h, (n+1) h) summed in ascending k.
  void coarse_increment(std::size_t i, std::size_t n, double h, std::span<double> out) const;

  /// Coarse increments of every particle for coarse step n with the given ratio (N x l, row-major).
  void coarse_increments(std::size_t n, std::size_t ratio, std::span<double> out) const;

  /// Same seed, more particles; the first particles() streams are unchanged.
  BrownianLattice extend_particles(std::size_t new_particles) const;

  /// Precomputes every fine increment. Values are identical to the lazy ones.
  void materialize();
  bool materialized() const noexcept { return cache_ != nullptr; }

 private:
  std::uint64_t seed_;
  std::size_t n_, l_;
  double h_fine_;
  double sqrt_h_;
  std::size_t m_fine_;
  std::shared_ptr<const std::vector<double>> cache_;  // [k][i][c]
};

/// Law of the initial condition, one per coordinate or one for all coordinates.
struct InitialLaw {
  enum class Kind { normal, uniform, binomial, point };
  Kind kind = Kind::normal;
  double a = 0.0;  // normal: mean; uniform: lower; binomial: c; point: value
  double b = 1.0;  // normal: variance; uniform: upper; binomial: p = P(X = 0)

  double sample(double u, double z) const;
  std::string to_string() const;
};

struct InitialSpec {
  std::vector<InitialLaw> laws;  // size 1 (shared) or d (product)

  /// "normal(3,9)", "uniform(4,12)", "binomial(50,0.5)", "point(0)", or
  /// "product(normal(2,16), normal(0,16))". Throws ConfigInvalid.
  static InitialSpec parse(const std::string& text);
  std::string to_string() const;
  const InitialLaw& law(std::size_t axis) const;
};

/// Initial state: coordinate (i, c) drawn from counter-based uniforms keyed by
/// (seed, stream, i, c), so growing N keeps earlier particles' values.
ParticleState sample_initial(const InitialSpec& spec, std::size_t n, std::size_t d, std::uint64_t seed,
                             std::uint32_t stream = static_cast<std::uint32_t>(Stream::initial));

}  // namespace splitstep
