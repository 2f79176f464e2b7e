// stemmer.hpp - Porter (1980) stemmer, used by the METEOR stem stage.
#pragma once

#include <string>

namespace ovre {

namespace detail {

class PorterStemmer {
 public:
  // Words shorter than 3 letters, or containing anything outside [a-z],
  // are returned unchanged.
  static std::string stem(const std::string& word) {
    if (word.size() < 3) return word;
    for (char c : word)
      if (c < 'a' || c > 'z') return word;
    std::string w = word;
    step1a(w);
    step1b(w);
    step1c(w);
    step2(w);
    step3(w);
    step4(w);
    step5a(w);
    step5b(w);
    return w;
  }

 private:
  static bool is_consonant(const std::string& w, std::size_t i) {
    switch (w[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !is_consonant(w, i - 1);
      default:
        return true;
    }
  }

  // m in the [C](VC){m}[V] decomposition of w[0..len).
  static int measure(const std::string& w, std::size_t len) {
    int m = 0;
    std::size_t i = 0;
    while (i < len && is_consonant(w, i)) ++i;
    while (i < len) {
      while (i < len && !is_consonant(w, i)) ++i;
      if (i >= len) break;
      ++m;
      while (i < len && is_consonant(w, i)) ++i;
    }
    return m;
  }

  static bool has_vowel(const std::string& w, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i)
      if (!is_consonant(w, i)) return true;
    return false;
  }

  static bool double_consonant(const std::string& w, std::size_t len) {
    return len >= 2 && w[len - 1] == w[len - 2] && is_consonant(w, len - 1);
  }

  // *o: stem ends consonant-vowel-consonant and the last is not w, x or y.
  static bool cvc(const std::string& w, std::size_t len) {
    if (len < 3) return false;
    if (!is_consonant(w, len - 3) || is_consonant(w, len - 2) ||
        !is_consonant(w, len - 1))
      return false;
    const char c = w[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
  }

  static bool ends_with(const std::string& w, const char* suffix, std::size_t& stem_len) {
    const std::size_t n = std::char_traits<char>::length(suffix);
    if (w.size() < n) return false;
    if (w.compare(w.size() - n, n, suffix) != 0) return false;
    stem_len = w.size() - n;
    return true;
  }

  static void step1a(std::string& w) {
    std::size_t s;
    if (ends_with(w, "sses", s)) {
      w.erase(s + 2);
    } else if (ends_with(w, "ies", s)) {
      w.erase(s + 1);
    } else if (ends_with(w, "ss", s)) {
      // keep
    } else if (ends_with(w, "s", s)) {
      w.erase(s);
    }
  }

  static void step1b(std::string& w) {
    std::size_t s;
    if (ends_with(w, "eed", s)) {
      if (measure(w, s) > 0) w.erase(s + 2);
      return;
    }
    bool removed = false;
    if (ends_with(w, "ed", s) && has_vowel(w, s)) {
      w.erase(s);
      removed = true;
    } else if (ends_with(w, "ing", s) && has_vowel(w, s)) {
      w.erase(s);
      removed = true;
    }
    if (!removed) return;
    if (ends_with(w, "at", s) || ends_with(w, "bl", s) || ends_with(w, "iz", s)) {
      w += 'e';
    } else if (double_consonant(w, w.size())) {
      const char c = w.back();
      if (c != 'l' && c != 's' && c != 'z') w.pop_back();
    } else if (measure(w, w.size()) == 1 && cvc(w, w.size())) {
      w += 'e';
    }
  }

  static void step1c(std::string& w) {
    std::size_t s;
    if (ends_with(w, "y", s) && has_vowel(w, s)) w[s] = 'i';
  }

  struct Rule {
    const char* from;
    const char* to;
  };

  static bool apply_rules(std::string& w, const Rule* rules, std::size_t count,
                          int min_measure) {
    for (std::size_t r = 0; r < count; ++r) {
      std::size_t s;
      if (ends_with(w, rules[r].from, s)) {
        if (measure(w, s) > min_measure) {
          w.erase(s);
          w += rules[r].to;
        }
        return true;  // longest match decides; no further rules tried
      }
    }
    return false;
  }

  static void step2(std::string& w) {
    static const Rule rules[] = {
        {"ational", "ate"}, {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"ization", "ize"}, {"tional", "tion"},
        {"biliti", "ble"},  {"entli", "ent"},   {"ousli", "ous"},
        {"ation", "ate"},   {"alism", "al"},    {"aliti", "al"},
        {"iviti", "ive"},   {"enci", "ence"},   {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},
        {"ator", "ate"},    {"eli", "e"},
    };
    apply_rules(w, rules, sizeof(rules) / sizeof(rules[0]), 0);
  }

  static void step3(std::string& w) {
    static const Rule rules[] = {
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    };
    apply_rules(w, rules, sizeof(rules) / sizeof(rules[0]), 0);
  }

  static void step4(std::string& w) {
    static const Rule plain[] = {
        {"ement", ""}, {"ance", ""}, {"ence", ""}, {"able", ""}, {"ible", ""},
        {"ment", ""},  {"ant", ""},  {"ent", ""},  {"ism", ""},  {"ate", ""},
        {"iti", ""},   {"ous", ""},  {"ive", ""},  {"ize", ""},  {"al", ""},
        {"er", ""},    {"ic", ""},   {"ou", ""},
    };
    std::size_t s;
    // "ion" only after s or t, and it outranks shorter suffixes when longer.
    if (ends_with(w, "ion", s)) {
      if (s > 0 && (w[s - 1] == 's' || w[s - 1] == 't') && measure(w, s) > 1)
        w.erase(s);
      return;
    }
    apply_rules(w, plain, sizeof(plain) / sizeof(plain[0]), 1);
  }

  static void step5a(std::string& w) {
    std::size_t s;
    if (!ends_with(w, "e", s)) return;
    const int m = measure(w, s);
    if (m > 1 || (m == 1 && !cvc(w, s))) w.erase(s);
  }

  static void step5b(std::string& w) {
    if (w.size() >= 2 && w.back() == 'l' && double_consonant(w, w.size()) &&
        measure(w, w.size()) > 1)
      w.pop_back();
  }
};

}  // namespace detail

/// Porter stem of a lowercase word. Non [a-z] input passes through unchanged.
inline std::string porter_stem(const std::string& word) {
  return detail::PorterStemmer::stem(word);
}

}  // namespace ovre
