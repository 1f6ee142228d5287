#include "lssid/word.hpp"

#include "lssid/error.hpp"

#include <algorithm>
#include <charconv>

namespace lssid {

Word::Letter Word::first() const {
  if (letters_.empty()) throw Error(ErrorCode::InvalidArgument, "first letter of the empty word");
  return letters_.front();
}

Word Word::rest() const {
  if (letters_.empty()) return {};
  return Word(std::vector<Letter>(letters_.begin() + 1, letters_.end()));
}

Word Word::operator+(const Word& tail) const {
  std::vector<Letter> out;
  out.reserve(letters_.size() + tail.letters_.size());
  out.insert(out.end(), letters_.begin(), letters_.end());
  out.insert(out.end(), tail.letters_.begin(), tail.letters_.end());
  return Word(std::move(out));
}

void Word::check_modes(int num_modes) const {
  for (Letter l : letters_) {
    if (l < 1 || l > num_modes) {
      throw Error(ErrorCode::InvalidMode, "mode " + std::to_string(l) + " in word '" + display() +
                                              "' outside {1.." + std::to_string(num_modes) + "}");
    }
  }
}

std::string Word::to_string(int num_modes) const {
  std::string out;
  const bool digits = num_modes <= 9;
  for (std::size_t i = 0; i < letters_.size(); ++i) {
    if (!digits && i > 0) out += ',';
    out += std::to_string(letters_[i]);
  }
  return out;
}

std::string Word::display() const {
  if (letters_.empty()) return "eps";
  std::string out;
  const bool digits = std::all_of(letters_.begin(), letters_.end(), [](Letter l) { return l <= 9; });
  for (std::size_t i = 0; i < letters_.size(); ++i) {
    if (!digits && i > 0) out += ',';
    out += std::to_string(letters_[i]);
  }
  return out;
}

Word Word::parse(std::string_view text, int num_modes) {
  if (text.empty() || text == "eps") return {};
  std::vector<Letter> letters;
  if (num_modes <= 9) {
    for (char c : text) {
      if (c < '1' || c > '9') {
        throw Error(ErrorCode::InvalidMode, "bad letter '" + std::string(1, c) + "' in word '" +
                                                std::string(text) + "'");
      }
      letters.push_back(c - '0');
    }
  } else {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t comma = std::min(text.find(',', pos), text.size());
      Letter v = 0;
      const auto piece = text.substr(pos, comma - pos);
      auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
      if (ec != std::errc() || ptr != piece.data() + piece.size()) {
        throw Error(ErrorCode::InvalidMode, "bad word '" + std::string(text) + "'");
      }
      letters.push_back(v);
      pos = comma + 1;
    }
  }
  Word w(std::move(letters));
  w.check_modes(num_modes);
  return w;
}

std::strong_ordering operator<=>(const Word& a, const Word& b) {
  if (auto c = a.size() <=> b.size(); c != 0) return c;
  return std::lexicographical_compare_three_way(a.letters_.begin(), a.letters_.end(),
                                                b.letters_.begin(), b.letters_.end());
}

std::vector<Word> enumerate_words(int num_modes, std::size_t min_len, std::size_t max_len) {
  std::vector<Word> out;
  for (std::size_t len = min_len; len <= max_len; ++len) {
    std::vector<Word::Letter> letters(len, 1);
    while (true) {
      out.emplace_back(letters);
      // odometer increment, last letter fastest
      std::size_t i = len;
      while (i > 0 && letters[i - 1] == num_modes) {
        letters[i - 1] = 1;
        --i;
      }
      if (i == 0) break;
      ++letters[i - 1];
    }
  }
  return out;
}

}  // namespace lssid
