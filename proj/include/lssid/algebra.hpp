#pragma once

#include "lssid/linalg.hpp"
#include "lssid/word.hpp"

#include <functional>
#include <map>
#include <span>
#include <vector>

namespace lssid {

/// Word-indexed family of equally shaped matrices. Shape is fixed at
/// construction and checked on every insertion; lookups of absent words never
/// produce a default value.
class WordTable {
 public:
  using Map = std::map<Word, Matrix>;

  WordTable() = default;
  WordTable(Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols) {}

  Eigen::Index rows() const noexcept { return rows_; }
  Eigen::Index cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Inserts or replaces. Throws Error(DimensionMismatch) on a shape mismatch.
  void insert(const Word& w, Matrix value);

  bool contains(const Word& w) const { return entries_.count(w) != 0; }
  const Matrix* find(const Word& w) const;
  /// Throws Error(MissingMarkovParameter) naming the word if absent.
  const Matrix& at(const Word& w) const;

  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

  std::vector<Word> words() const;

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  Map entries_;
};

/// Any word-to-matrix map; used where Markov values are produced on demand.
using MarkovFunction = std::function<Matrix(const Word&)>;

/// One row selector (u_i, k_i): Markov parameters are read at row `row`
/// (1-based) after right-appending `word`.
struct RowIndex {
  Word word;
  int row = 1;
  friend bool operator==(const RowIndex&, const RowIndex&) = default;
};

/// One column selector (sigma_j, v_j, l_j): column `col` (1-based) of the
/// Markov parameter whose word starts with `mode` followed by `word`.
struct ColumnIndex {
  int mode = 1;
  Word word;
  int col = 1;
  friend bool operator==(const ColumnIndex&, const ColumnIndex&) = default;
};

/// Row/column selection for a reduced Hankel matrix of dimension n =
/// alpha.size() = beta.size(). Empty words are accepted in both lists; the
/// Hankel formulas extend to them with A_eps = I.
struct Selection {
  std::vector<RowIndex> alpha;
  std::vector<ColumnIndex> beta;
  int n_y = 1;
  int n_cols = 1;

  int dim() const noexcept { return static_cast<int>(alpha.size()); }

  /// Throws Error(InvalidArgument / InvalidMode) if malformed.
  void validate(int num_modes) const;

  /// Longest word appearing in any Hankel block built from this selection.
  std::size_t max_word_length() const;

  friend bool operator==(const Selection&, const Selection&) = default;
};

/// A_{s_k} ... A_{s_1} for w = s_1 ... s_k; identity for the empty word.
Matrix matrix_product_along_word(std::span<const Matrix> family, const Word& w);

/// Product of the mode probabilities along w; 1 for the empty word.
double word_probability(const Vector& p, const Word& w);

/// Throws Error(InvalidProbability) unless p is positive and sums to one
/// within `tol`.
void check_probabilities(const Vector& p, double tol = 1e-12);

/// Deduplicated words whose Markov values occur in the Hankel blocks of
/// `sel`: {u_i, s_j v_j, s_j v_j u_i, s_j v_j s u_i, s u_i}. Never contains
/// the empty word. Sorted length-then-lexicographic.
std::vector<Word> required_words(const Selection& sel, int num_modes);

/// The four Hankel blocks built from a Markov function.
struct HankelBlocks {
  Matrix H;                      // n x n
  std::vector<Matrix> H_shift;   // per mode, n x n
  std::vector<Matrix> H_input;   // per mode, n x n_cols
  Matrix H_output;               // n_y x n
};

/// [H]_{ij} = [M(s_j v_j u_i)]_{k_i l_j},  [H_s]_{ij} = [M(s_j v_j s u_i)]_{k_i l_j},
/// [H_{alpha,s}]_{ij} = [M(s u_i)]_{k_i j},  [H_beta]_{ij} = [M(s_j v_j)]_{i l_j}.
HankelBlocks build_hankel(const Selection& sel, int num_modes, const WordTable& markov);
HankelBlocks build_hankel(const Selection& sel, int num_modes, const MarkovFunction& markov);

}  // namespace lssid
