// Copyright 2026 The navloop Authors. Apache 2.0 License.
//
// Maps JSON pointers to source lines so validation errors can name the line
// of the offending value. Only run on text that already parsed cleanly.

#pragma once

#include <cctype>
#include <map>
#include <string>

namespace navloop::scenes::detail {

class JsonLineIndex {
 public:
  explicit JsonLineIndex(const std::string& text) : text_(text) {
    skip_ws();
    value("");
  }

  /// Line of the value at `pointer`, falling back to its closest recorded
  /// ancestor; 0 when nothing matches.
  int line_of(std::string pointer) const {
    while (true) {
      if (auto it = lines_.find(pointer); it != lines_.end()) return it->second;
      const auto cut = pointer.find_last_of('/');
      if (cut == std::string::npos) return 0;
      pointer.erase(cut);
    }
  }

 private:
  void value(const std::string& path) {
    lines_[path] = line_;
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      advance();
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const std::string key = string();
        skip_ws();
        advance();  // ':'
        skip_ws();
        value(path + "/" + key);
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          advance();
          skip_ws();
        }
      }
      advance();
    } else if (c == '[') {
      advance();
      skip_ws();
      int index = 0;
      while (pos_ < text_.size() && text_[pos_] != ']') {
        value(path + "/" + std::to_string(index++));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          advance();
          skip_ws();
        }
      }
      advance();
    } else if (c == '"') {
      string();
    } else {
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
             text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '}') {
        advance();
      }
    }
  }

  std::string string() {
    std::string out;
    advance();  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') {
        advance();
      }
      out += text_[pos_];
      advance();
    }
    advance();
    return out;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      advance();
    }
  }

  void advance() {
    if (pos_ < text_.size() && text_[pos_] == '\n') ++line_;
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

}  // namespace navloop::scenes::detail
