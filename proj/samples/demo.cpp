#include <cstdio>

#include "stable_slices/stable_slices.hpp"

using namespace stable_slices;
using namespace std::complex_literals;

namespace {

void print_roots(const char* label, RootMultiset r) {
  std::printf("%s", label);
  for (const auto& x : r) std::printf(" (%.6g, %.6g)", x.real(), x.imag());
  std::printf("\n");
}

}  // namespace

int main() {
  // four roots in the open upper half-plane
  const RootMultiset x{-20.0 + 1i, 1i, 20.0 + 1i, 20i};
  const Poly p = vieta_from_roots(x);
  std::printf("z =");
  for (const auto& c : p.z()) std::printf(" (%g, %g)", c.real(), c.imag());
  std::printf("\n");
  const auto v = is_stable(p, HalfPlane::upper());
  std::printf("stable: %s, interior %d, boundary %d\n", v.stable ? "yes" : "no", v.profile.interior_total(), v.profile.boundary_distinct());

  // pin z_1, z_2, z_3 and push the remaining freedom to the boundary
  CMatrix L = CMatrix::Zero(3, 4);
  for (int i = 0; i < 3; ++i) L(i, i) = 1.0;
  const Slice s(L, CVector(p.z().begin(), p.z().begin() + 3));
  const auto rep = compress(p, s);
  std::printf("compress: %s after %d steps\n", to_string(rep.status), rep.iterations);
  for (const auto& st : rep.steps)
    std::printf("  %-16s %-18s eps=%.6g interior=%d boundary=%d\n", st.method.c_str(), to_string(st.event), st.step_size,
                st.profile.interior_total(), st.profile.boundary_distinct());
  print_roots("final roots:", rep.final_roots);

  // one point of the half-plane reproducing e_2
  const Complex y = gws_solve(SymmetricPoly::affine({0.0, 0.0, 1.0}), CVector{2i, 8i}, HalfPlane::upper());
  std::printf("gws: e_2(2i, 8i) = e_2(y, y) for y = (%g, %g)\n", y.real(), y.imag());
  return 0;
}
