#pragma once

#include "lssid/covariance.hpp"
#include "lssid/identify.hpp"
#include "lssid/model.hpp"
#include "lssid/simulate.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace lssid::io {

using Json = nlohmann::ordered_json;

/// Parses a JSON file. Missing or unreadable files raise Error(Io) naming
/// the path; syntax errors raise Error(InvalidArgument) with line and column.
Json read_json_file(const std::filesystem::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

Json matrix_to_json(const Matrix& m);
/// Row-major nested arrays; a flat array is read as a column vector.
Matrix matrix_from_json(const Json& j, const std::string& what);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& what);

/// Fields: modes, A, B, K, C, D, F, p, Qu and either Qv (p_s-weighted) or
/// Qv_conditional (E[v v^T | q = s]).
Json model_to_json(const SwitchedModel& m);
SwitchedModel model_from_json(const Json& j);

Json selection_to_json(const Selection& sel, int num_modes);
Selection selection_from_json(const Json& j, int num_modes);

Json covariance_table_to_json(const CovarianceTable& t);
CovarianceTable covariance_table_from_json(const Json& j);

Json diagnostics_to_json(const RealizationDiagnostics& d);

/// Shortest round-trip decimal representation.
std::string format_double(double x);

/// CSV with header t,q,u_1..u_nu,y_1..y_ny.
std::string dataset_to_csv(const Dataset& d);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& d);
/// CSV with header t,y_1..y_ny for the noise-free output channel.
void write_noise_free_csv(const std::filesystem::path& path, const Dataset& d);
/// Reads the dataset format above. Throws Error(Io) or
/// Error(InvalidArgument) with the offending line number.
Dataset read_dataset_csv(const std::filesystem::path& path);
/// Attaches a noise-free channel read from `path` to `d`.
void read_noise_free_csv(const std::filesystem::path& path, Dataset& d);
/// Writes a t,y_1..y_ny series.
void write_series_csv(const std::filesystem::path& path, const Matrix& y, long t0);

/// 64-bit FNV-1a hash, hex encoded.
std::string fnv1a_hex(const std::string& text);

}  // namespace lssid::io
