#include "splitstep/particle_state.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "splitstep/error.hpp"

namespace splitstep {

ParticleState::ParticleState(std::size_t particles, std::size_t dim)
    : n(particles), d(dim), positions(particles * dim, 0.0) {
  if (particles == 0 || dim == 0) throw SizeMismatch("a state needs N >= 1 and d >= 1");
}

ParticleState::ParticleState(std::size_t particles, std::size_t dim, std::vector<double> values)
    : n(particles), d(dim), positions(std::move(values)) {
  if (particles == 0 || dim == 0) throw SizeMismatch("a state needs N >= 1 and d >= 1");
  if (positions.size() != particles * dim) throw SizeMismatch("state storage does not match N x d");
}

bool ParticleState::all_finite() const {
  for (double v : positions)
    if (!std::isfinite(v)) return false;
  return true;
}

std::vector<double> to_component_major(const ParticleState& state) {
  std::vector<double> out(state.positions.size());
  for (std::size_t i = 0; i < state.n; ++i)
    for (std::size_t c = 0; c < state.d; ++c) out[c * state.n + i] = state.positions[i * state.d + c];
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_state(const std::filesystem::path& path, const ParticleState& state) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoFailure("cannot open " + path.string() + " for writing");
  put<std::uint64_t>(os, state.n);
  put<std::uint64_t>(os, state.d);
  put<double>(os, state.time);
  os.write(reinterpret_cast<const char*>(state.positions.data()),
           static_cast<std::streamsize>(state.positions.size() * sizeof(double)));
  if (!os) throw IoFailure("write failed: " + path.string());
}

ParticleState read_state(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoFailure("cannot open " + path.string());
  const auto n = get<std::uint64_t>(is);
  const auto d = get<std::uint64_t>(is);
  const double t = get<double>(is);
  if (!is || n == 0 || d == 0 || n > (1ULL << 32) || d > 4096) throw IoFailure("bad checkpoint header: " + path.string());
  std::vector<double> values(n * d);
  is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!is) throw IoFailure("truncated checkpoint: " + path.string());
  ParticleState s(n, d, std::move(values));
  s.time = t;
  return s;
}

}  // namespace splitstep
