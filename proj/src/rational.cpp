#include "spcf/rational.hpp"

#include <sstream>

namespace spcf {

std::optional<Rat> rat_from_string(const std::string& text) {
  if (text.empty()) return std::nullopt;
  bool neg = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    neg = text[0] == '-';
    i = 1;
  }
  std::string intpart, fracpart, denpart;
  std::string* cur = &intpart;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c >= '0' && c <= '9') {
      cur->push_back(c);
    } else if (c == '.' && cur == &intpart && denpart.empty()) {
      cur = &fracpart;
    } else if (c == '/' && cur == &intpart && fracpart.empty()) {
      cur = &denpart;
    } else {
      return std::nullopt;
    }
  }
  if (intpart.empty()) return std::nullopt;
  Rat value;
  if (!denpart.empty()) {
    if (denpart.find_first_not_of('0') == std::string::npos) return std::nullopt;
    value = Rat(mpz_class(intpart), mpz_class(denpart));
  } else if (cur == &fracpart) {
    // decimal: intpart.fracpart == (intpart*10^k + fracpart) / 10^k
    mpz_class scale = 1;
    for (std::size_t k = 0; k < fracpart.size(); ++k) scale *= 10;
    mpz_class num = mpz_class(intpart) * scale + (fracpart.empty() ? mpz_class(0) : mpz_class(fracpart));
    value = Rat(num, scale);
  } else {
    value = Rat(mpz_class(intpart));
  }
  value.canonicalize();
  if (neg) value = -value;
  return value;
}

std::string rat_to_string(const Rat& q) {
  std::ostringstream os;
  os << q;
  return os.str();
}

std::string rat_to_decimal(const Rat& q, int digits) {
  Rat a = q;
  std::string out;
  if (a < 0) {
    out.push_back('-');
    a = -a;
  }
  mpz_class ip = a.get_num() / a.get_den();
  out += ip.get_str();
  out.push_back('.');
  mpz_class rem = a.get_num() - ip * a.get_den();
  for (int k = 0; k < digits; ++k) {
    rem *= 10;
    mpz_class d = rem / a.get_den();
    out += d.get_str();
    rem -= d * a.get_den();
  }
  return out;
}

Rat dyadic_floor(const Rat& q, unsigned bits) {
  mpz_class scale = 1;
  scale <<= bits;
  mpz_class num = q.get_num() * scale;
  mpz_class fl;
  mpz_fdiv_q(fl.get_mpz_t(), num.get_mpz_t(), q.get_den().get_mpz_t());
  Rat r(fl, scale);
  r.canonicalize();
  return r;
}

Rat dyadic_ceil(const Rat& q, unsigned bits) {
  mpz_class scale = 1;
  scale <<= bits;
  mpz_class num = q.get_num() * scale;
  mpz_class cl;
  mpz_cdiv_q(cl.get_mpz_t(), num.get_mpz_t(), q.get_den().get_mpz_t());
  Rat r(cl, scale);
  r.canonicalize();
  return r;
}

}  // namespace spcf
