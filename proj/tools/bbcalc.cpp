#include <cstdio>
int main(){ std::puts("bbcalc placeholder"); return 0; }
