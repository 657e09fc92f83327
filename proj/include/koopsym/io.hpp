#pragma once

#include <iosfwd>
#include <string>

#include "koopsym/dynamics.hpp"
#include "koopsym/linalg.hpp"

namespace koopsym::io {

/// Header "n=<dim>,M=<pairs>,dt=<real>", then one line per pair holding the
/// x row followed by the y row. Values use 17 significant digits, so a
/// read after write reproduces every double exactly.
void write_snapshots(std::ostream& out, const dynamics::SnapshotSet& s);
void write_snapshots(const std::string& path, const dynamics::SnapshotSet& s);
dynamics::SnapshotSet read_snapshots(std::istream& in);
dynamics::SnapshotSet read_snapshots(const std::string& path);

/// Plain comma-separated matrix, no header. Complex entries are written as
/// re+imj only when the matrix has a nonzero imaginary part.
void write_matrix(std::ostream& out, const CMatrix& m);
void write_matrix(const std::string& path, const CMatrix& m);
void write_matrix(const std::string& path, const RMatrix& m);
CMatrix read_matrix(std::istream& in);
CMatrix read_matrix(const std::string& path);

std::string format_double(double v);

}  // namespace koopsym::io
