#pragma once

#include "hmggc/density.hpp"
#include "hmggc/real.hpp"

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace hmggc {

enum class MixOp { product, ratio };

struct MixtureSpec {
  Density left;   // Y
  Density right;  // X
  MixOp op;
  Density density() const;
};

// Density of Y*X: integral of (1/x) fY(z/x) fX(x) dx.
double product_density(const Density& fY, const Density& fX, double z);
// Density of Y/X: integral of x fY(zx) fX(x) dx.
double ratio_density(const Density& fY, const Density& fX, double z);

struct CatalogEntry {
  std::string name;
  std::function<double(double)> lt;
  std::function<Real(const Real&)> lt_real;
  std::function<double(double)> pdf;
  MixtureSpec construction_spec;
  Density construction;
};

// Names: "YU", "Y/U", "YX2", "Y/X2".
CatalogEntry catalog(const std::string& name);
bool is_catalog_name(const std::string& name);
std::vector<std::string> catalog_names();

// E1(x) = integral over y > 1 of exp(-x y)/y.
double expint_e1(double x);

// Normalized x^-alpha exp(-delta/x) f(x).
Density tilt(const Density& f, double alpha, double delta);

// Monotone-cubic table of f on the given grid (cached evaluations).
Density tabulate(const Density& f, const std::vector<double>& grid);

// Writes "x,f" rows.
void write_csv(std::ostream& os, const Density& f, const std::vector<double>& grid);

}  // namespace hmggc
