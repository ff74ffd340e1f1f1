namespace rosys {}
