#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lssid {

/// A finite sequence of discrete modes. Letters are 1-based, matching the
/// usual mode labels {1, ..., D}; the empty word has no letters.
///
/// Words are ordered length-first, then lexicographically. Every container
/// keyed by words in this library iterates in that order.
class Word {
 public:
  using Letter = int;

  Word() = default;
  Word(std::initializer_list<Letter> letters) : letters_(letters) {}
  explicit Word(std::vector<Letter> letters) : letters_(std::move(letters)) {}

  static Word letter(Letter sigma) { return Word{sigma}; }

  std::size_t size() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }
  Letter operator[](std::size_t i) const { return letters_[i]; }
  std::span<const Letter> letters() const noexcept { return letters_; }

  /// First letter; the word must be nonempty.
  Letter first() const;
  /// Everything after the first letter.
  Word rest() const;

  Word operator+(const Word& tail) const;

  /// Throws Error(InvalidMode) unless every letter lies in {1..num_modes}.
  void check_modes(int num_modes) const;

  /// Digit string for num_modes <= 9 ("121"), comma separated otherwise
  /// ("10,2,3"). The empty word serializes as "".
  std::string to_string(int num_modes) const;
  /// Human-readable form used in messages: "eps" for the empty word.
  std::string display() const;

  /// Inverse of to_string. Also accepts "eps" for the empty word.
  static Word parse(std::string_view text, int num_modes);

  friend bool operator==(const Word&, const Word&) = default;
  friend std::strong_ordering operator<=>(const Word& a, const Word& b);

 private:
  std::vector<Letter> letters_;
};

/// All words over {1..num_modes} with min_len <= |w| <= max_len, in
/// length-then-lexicographic order.
std::vector<Word> enumerate_words(int num_modes, std::size_t min_len, std::size_t max_len);

}  // namespace lssid
