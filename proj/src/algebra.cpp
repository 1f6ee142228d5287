#include "lssid/algebra.hpp"

#include "lssid/error.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace lssid {

namespace {

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

void WordTable::insert(const Word& w, Matrix value) {
  if (value.rows() != rows_ || value.cols() != cols_) {
    throw Error(ErrorCode::DimensionMismatch,
                "word table expects " + shape_str(rows_, cols_) + " matrices, got " +
                    shape_str(value.rows(), value.cols()) + " for word '" + w.display() + "'");
  }
  entries_.insert_or_assign(w, std::move(value));
}

const Matrix* WordTable::find(const Word& w) const {
  auto it = entries_.find(w);
  return it == entries_.end() ? nullptr : &it->second;
}

const Matrix& WordTable::at(const Word& w) const {
  if (const Matrix* m = find(w)) return *m;
  throw Error(ErrorCode::MissingMarkovParameter, "missing Markov parameter for word '" + w.display() + "'");
}

std::vector<Word> WordTable::words() const {
  std::vector<Word> out;
  out.reserve(entries_.size());
  for (const auto& [w, m] : entries_) out.push_back(w);
  return out;
}

void Selection::validate(int num_modes) const {
  const auto n = alpha.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "selection dimension must be >= 1");
  if (beta.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "selection has |alpha| = " + std::to_string(n) +
                                                " but |beta| = " + std::to_string(beta.size()));
  }
  for (const auto& r : alpha) {
    r.word.check_modes(num_modes);
    if (r.word.size() > n) throw Error(ErrorCode::InvalidArgument, "alpha word longer than n: " + r.word.display());
    if (r.row < 1 || r.row > n_y) throw Error(ErrorCode::InvalidArgument, "alpha row index out of range");
  }
  for (const auto& c : beta) {
    if (c.mode < 1 || c.mode > num_modes) throw Error(ErrorCode::InvalidMode, "beta mode out of range");
    c.word.check_modes(num_modes);
    if (c.word.size() > n) throw Error(ErrorCode::InvalidArgument, "beta word longer than n: " + c.word.display());
    if (c.col < 1 || c.col > n_cols) throw Error(ErrorCode::InvalidArgument, "beta column index out of range");
  }
}

std::size_t Selection::max_word_length() const {
  std::size_t u = 0, v = 0;
  for (const auto& r : alpha) u = std::max(u, r.word.size());
  for (const auto& c : beta) v = std::max(v, c.word.size());
  return u + v + 2;
}

Matrix matrix_product_along_word(std::span<const Matrix> family, const Word& w) {
  if (family.empty()) throw Error(ErrorCode::InvalidArgument, "empty matrix family");
  w.check_modes(static_cast<int>(family.size()));
  const Eigen::Index n = family.front().rows();
  Matrix out = Matrix::Identity(n, n);
  for (Word::Letter l : w.letters()) out = family[l - 1] * out;
  return out;
}

double word_probability(const Vector& p, const Word& w) {
  w.check_modes(static_cast<int>(p.size()));
  double out = 1.0;
  for (Word::Letter l : w.letters()) {
    if (!(p(l - 1) > 0.0)) {
      throw Error(ErrorCode::InvalidProbability, "nonpositive probability for mode " + std::to_string(l));
    }
    out *= p(l - 1);
  }
  return out;
}

void check_probabilities(const Vector& p, double tol) {
  if (p.size() == 0) throw Error(ErrorCode::InvalidProbability, "empty probability vector");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) > 0.0)) {
      throw Error(ErrorCode::InvalidProbability, "nonpositive probability for mode " + std::to_string(i + 1));
    }
  }
  if (std::abs(p.sum() - 1.0) > tol) {
    std::ostringstream os;
    os << "probabilities sum to " << p.sum() << ", not 1";
    throw Error(ErrorCode::InvalidProbability, os.str());
  }
}

std::vector<Word> required_words(const Selection& sel, int num_modes) {
  std::set<Word> words;
  auto add = [&](Word w) {
    if (!w.empty()) words.insert(std::move(w));
  };
  for (const auto& r : sel.alpha) {
    add(r.word);
    for (int s = 1; s <= num_modes; ++s) add(Word::letter(s) + r.word);
  }
  for (const auto& c : sel.beta) {
    const Word head = Word::letter(c.mode) + c.word;
    add(head);
    for (const auto& r : sel.alpha) {
      add(head + r.word);
      for (int s = 1; s <= num_modes; ++s) add(head + Word::letter(s) + r.word);
    }
  }
  return {words.begin(), words.end()};
}

HankelBlocks build_hankel(const Selection& sel, int num_modes, const MarkovFunction& markov) {
  sel.validate(num_modes);
  const Eigen::Index n = sel.dim();
  HankelBlocks out;
  out.H.resize(n, n);
  out.H_output.resize(sel.n_y, n);
  out.H_shift.assign(num_modes, Matrix(n, n));
  out.H_input.assign(num_modes, Matrix(n, sel.n_cols));

  auto fetch = [&](const Word& w) {
    Matrix m = markov(w);
    if (m.rows() != sel.n_y || m.cols() != sel.n_cols) {
      throw Error(ErrorCode::DimensionMismatch, "Markov parameter for '" + w.display() + "' has shape " +
                                                    shape_str(m.rows(), m.cols()) + ", selection expects " +
                                                    shape_str(sel.n_y, sel.n_cols));
    }
    return m;
  };

  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& c = sel.beta[j];
    const Word head = Word::letter(c.mode) + c.word;
    out.H_output.col(j) = fetch(head).col(c.col - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = sel.alpha[i];
      out.H(i, j) = fetch(head + r.word)(r.row - 1, c.col - 1);
      for (int s = 1; s <= num_modes; ++s) {
        out.H_shift[s - 1](i, j) = fetch(head + Word::letter(s) + r.word)(r.row - 1, c.col - 1);
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = sel.alpha[i];
    for (int s = 1; s <= num_modes; ++s) {
      out.H_input[s - 1].row(i) = fetch(Word::letter(s) + r.word).row(r.row - 1);
    }
  }
  return out;
}

HankelBlocks build_hankel(const Selection& sel, int num_modes, const WordTable& markov) {
  return build_hankel(sel, num_modes, MarkovFunction([&markov](const Word& w) { return markov.at(w); }));
}

}  // namespace lssid
