#ifndef MPAGER_TESTS_PVALUE_TABLE_H_
#define MPAGER_TESTS_PVALUE_TABLE_H_

// Two-sided Student-t tail probabilities, frozen from scipy.stats.t.sf
// (2 * sf(|t|, df)).
namespace mpager::reference {

struct PValueRow {
  double t;
  int df;
  double p;
};

inline constexpr PValueRow kStudentTTable[] = {
    {1.0, 3, 0.39100221895577053},
    {0.5, 1, 0.70483276469913358},
    {2.0, 1, 0.29516723530086642},
    {2.5, 5, 0.054490099342376204},
    {-1.7, 9, 0.12334766214382395},
    {3.1, 20, 0.0056448769391241865},
    {0.0, 7, 1},
    {4.5, 2, 0.046001907994276017},
    {1.96, 1000, 0.050273184955748708},
    {0.25, 50, 0.80361168527153515},
    {10.0, 4, 0.00056200362271599112},
    {2.2, 30, 0.035648439996835778},
    {6.0, 100, 3.1724915028028602e-08},
    {0.01, 2, 0.99292910895820097},
};

}  // namespace mpager::reference

#endif  // MPAGER_TESTS_PVALUE_TABLE_H_
