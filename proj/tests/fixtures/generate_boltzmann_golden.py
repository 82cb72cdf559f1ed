#!/usr/bin/env python3
# Regenerate with: python3 generate_boltzmann_golden.py > boltzmann_golden.json
# Independent oracle: scipy adaptive quadrature in Cartesian coordinates.
import json, math
import numpy as np
from scipy import integrate
out=[]
def tri(theta):
    t1,t2=theta
    f=lambda y,x: math.exp(-(t1*x+t2*y))
    Z=integrate.dblquad(f,0,1,0,lambda x:1-x,epsabs=1e-14,epsrel=1e-13)[0]
    mx=integrate.dblquad(lambda y,x:x*f(y,x),0,1,0,lambda x:1-x,epsabs=1e-14,epsrel=1e-13)[0]/Z
    my=integrate.dblquad(lambda y,x:y*f(y,x),0,1,0,lambda x:1-x,epsabs=1e-14,epsrel=1e-13)[0]/Z
    return math.log(Z),[mx,my]
def ball(theta,c,r):
    t1,t2=theta
    f=lambda y,x: math.exp(-(t1*x+t2*y))
    lo=lambda x: c[1]-math.sqrt(max(r*r-(x-c[0])**2,0)); hi=lambda x: c[1]+math.sqrt(max(r*r-(x-c[0])**2,0))
    kw=dict(epsabs=1e-14,epsrel=1e-13)
    Z=integrate.dblquad(f,c[0]-r,c[0]+r,lo,hi,**kw)[0]
    mx=integrate.dblquad(lambda y,x:x*f(y,x),c[0]-r,c[0]+r,lo,hi,**kw)[0]/Z
    my=integrate.dblquad(lambda y,x:y*f(y,x),c[0]-r,c[0]+r,lo,hi,**kw)[0]/Z
    return math.log(Z),[mx,my]
for th in ([0.0,0.0],[1.0,0.0],[2.0,-3.0],[10.0,10.0],[-5.0,1.0]):
    A,m=tri(th); out.append(dict(body=dict(kind="simplex",n=2),theta=th,expected_A=A,expected_mean=m))
for th in ([0.0,0.0],[1.0,2.0],[-4.0,0.5]):
    A,m=ball(th,[0.0,0.0],1.0); out.append(dict(body=dict(kind="ball",center=[0.0,0.0],radius=1.0),theta=th,expected_A=A,expected_mean=m))
A,m=ball([3.0,-1.0],[0.3,0.1],0.5); out.append(dict(body=dict(kind="ball",center=[0.3,0.1],radius=0.5),theta=[3.0,-1.0],expected_A=A,expected_mean=m))
print(json.dumps(out,indent=1))
